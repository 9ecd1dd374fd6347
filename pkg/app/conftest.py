import numpy as np
import pytest

from app.graph import Triple
from app.ingest import DatasetSplit, IdMap, LabeledPair, PreparedDataset, add_negatives
from app.model import DKSEModel, ParameterSet, SideSampling


TOY_USERS = 12
TOY_ITEMS = 15
TOY_ENTITIES = 20
TOY_RELATIONS = 3


@pytest.fixture
def toy_positive_split():
    # Six positives per user: four train, one validation, one test
    parts = {"train": [], "validation": [], "test": []}
    for user in range(TOY_USERS):
        for k in range(6):
            item = (user * 3 + k * 2) % TOY_ITEMS
            part = "validation" if k == 3 else "test" if k == 4 else "train"
            parts[part].append(LabeledPair(user, item, 1))
    return DatasetSplit(
        train=parts["train"],
        validation=parts["validation"],
        test=parts["test"],
        users=IdMap(f"u{n}" for n in range(TOY_USERS)),
        items=IdMap(f"i{n}" for n in range(TOY_ITEMS)),
    )


@pytest.fixture
def toy_dataset(toy_positive_split):
    return add_negatives(toy_positive_split, ratio=1, eval_ratio=1, seed=0)


@pytest.fixture
def toy_prepared(toy_dataset):
    triples = []
    for entity in range(10):
        triples.append(Triple(entity, entity % 3, 10 + entity % 5))
        triples.append(Triple(entity, (entity + 1) % 3, 15 + entity % 5))
    for j in range(5):
        triples.append(Triple(10 + j, 2, 15 + j))
    return PreparedDataset(
        split=toy_dataset,
        triples=triples,
        alignment={item: item for item in range(10)},
        entities=IdMap(f"e{n}" for n in range(TOY_ENTITIES)),
        relations=IdMap(f"r{n}" for n in range(TOY_RELATIONS)),
        tag="toy",
    )


@pytest.fixture
def toy_graph(toy_prepared):
    return toy_prepared.build_graph()


@pytest.fixture
def make_params(toy_graph):
    def _make(dim=8, n_queries=2, seed=0, selector_bias=None):
        params = ParameterSet.initialize(toy_graph.node_count, toy_graph.relation_count, dim, n_queries, seed)
        if selector_bias is not None:
            params.selector_bias[:] = selector_bias
        return params
    return _make


@pytest.fixture
def make_model(make_params):
    def _make(params=None, user=(2, 2), item=(1, 3), **options):
        return DKSEModel(
            params=params if params is not None else make_params(),
            user_sampling=SideSampling(*user),
            item_sampling=SideSampling(*item),
            **options,
        )
    return _make


@pytest.fixture
def toy_pairs(toy_dataset, toy_graph):
    """(user nodes, item nodes, labels) of the toy training pairs."""
    pairs = toy_dataset.train
    users = np.array([toy_graph.user_node(p.user) for p in pairs], dtype=np.int64)
    items = np.array([toy_graph.item_node(p.item) for p in pairs], dtype=np.int64)
    labels = np.array([p.label for p in pairs], dtype=np.float64)
    return users, items, labels
