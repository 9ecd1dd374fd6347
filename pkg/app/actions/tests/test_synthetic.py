import numpy as np
import pytest

from app import settings
from app.actions.configurations import SyntheticSpec
from app.actions.synthetic import generate_dataset, generate_synthetic
from app.ingest import IdMap, load_alignment, load_interactions, load_kg
from app.services.state import RunDirectory


@pytest.fixture
def tiny_spec():
    return SyntheticSpec(
        users=20,
        items=30,
        entities=50,
        relations=3,
        latent_dim=4,
        interactions_per_user=6,
        kg_edges_per_item=2,
        clusters=3,
        seed=3,
    )


def _node(name):
    return int(name[1:])


def test_output_sizes(tiny_spec):
    data = generate_synthetic(tiny_spec)

    assert len(data.interactions) == 20 * 6
    assert len(data.triples) == 30 * 2
    assert data.alignment == [(f"i{n}", f"e{n}") for n in range(30)]


def test_same_seed_gives_identical_files(tiny_spec):
    first, second = generate_synthetic(tiny_spec), generate_synthetic(tiny_spec)

    assert first.interaction_lines() == second.interaction_lines()
    assert first.kg_lines() == second.kg_lines()


def test_different_seeds_give_different_clicks(tiny_spec):
    other = tiny_spec.copy(update={"seed": 4})

    assert generate_synthetic(tiny_spec).interaction_lines() != generate_synthetic(other).interaction_lines()


def test_clusters_have_equal_sizes(tiny_spec):
    data = generate_synthetic(tiny_spec)

    assert np.bincount(data.item_clusters).tolist() == [10, 10, 10]


def test_kg_edges_stay_inside_the_item_cluster(tiny_spec):
    data = generate_synthetic(tiny_spec)

    tails = set()
    for head, relation, tail in data.triples:
        item, tail = _node(head), _node(tail)
        assert tail >= tiny_spec.items
        assert tail % tiny_spec.clusters == data.item_clusters[item]
        assert _node(relation) < tiny_spec.relations
        tails.add(tail)
    # Ten items times two edges walk over every attribute entity of each cluster
    assert tails == set(range(tiny_spec.items, tiny_spec.entities))


def test_without_noise_users_click_their_best_cluster(tiny_spec):
    data = generate_synthetic(tiny_spec.copy(update={"noise": 0.0}))

    best = np.argmax(data.user_latents @ data.cluster_latents.T, axis=1)
    for user, item in data.interactions:
        assert data.item_clusters[_node(item)] == best[_node(user)]


def test_users_click_distinct_items(tiny_spec):
    data = generate_synthetic(tiny_spec)

    by_user = {}
    for user, item in data.interactions:
        by_user.setdefault(user, set()).add(item)

    assert all(len(items) == 6 for items in by_user.values())


def test_written_files_parse_back(tmp_path, tiny_spec):
    data = generate_synthetic(tiny_spec)
    with RunDirectory(tmp_path) as run:
        data.write(run)

    entities, relations = IdMap(), IdMap()
    assert len(load_interactions(tmp_path / settings.SYNTH_INTERACTIONS_FILENAME)) == 120
    assert len(load_kg(tmp_path / settings.SYNTH_KG_FILENAME, entities, relations)) == 60
    assert len(load_alignment(tmp_path / settings.SYNTH_ALIGNMENT_FILENAME, entities)) == 30
    assert len(relations) == 3


def test_generated_dataset_is_ready_for_training(tiny_spec):
    prepared = generate_dataset(tiny_spec)
    graph = prepared.build_graph()

    stats = prepared.statistics()
    assert stats["users"] == 20
    assert stats["interactions"] == 120
    assert prepared.tag == "synthetic-3"
    assert graph.n_users == 20
    # Every kept item keeps its entity
    assert len(prepared.alignment) == prepared.n_items


def test_generated_dataset_is_reproducible(tiny_spec):
    first, second = generate_dataset(tiny_spec), generate_dataset(tiny_spec)

    assert first.split.train == second.split.train
    assert first.split.test == second.split.test
