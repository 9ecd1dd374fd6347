import itertools

import numpy as np
import pytest

from app.graph import Triple, build_unified_graph
from app.model import AblationMask, DKSEModel, GroupingMode, ParameterSet, SideSampling, tape
from app.train import HyperParams, gradient_check, relative_error, total_loss


MASKS = [AblationMask.full()] + [AblationMask.without(c) for c in ("U/V", "H", "R", "T")]


@pytest.fixture
def tiny_graph():
    # 4 users, 5 items, 6 entities of which 4 are items: 11 nodes
    interactions = [(u, (u + k) % 5) for u in range(4) for k in range(2)]
    triples = [
        Triple(0, 0, 4), Triple(1, 0, 4), Triple(2, 1, 5),
        Triple(3, 1, 5), Triple(0, 1, 1), Triple(2, 0, 3),
    ]
    return build_unified_graph(
        interactions, triples, {i: i for i in range(4)}, n_users=4, n_items=5, n_entities=6, n_relations=2,
    )


def _params(graph, seed):
    params = ParameterSet.initialize(graph.node_count, graph.relation_count, 8, 2, seed)
    # Keeps every selector key away from the ReLU kink
    params.selector_bias[:] = 1.0
    return params


def _objective(graph, params, grouping, mask, use_contrastive, seed=0):
    hyper = HyperParams(dim=8, n_queries=2, l2=1e-3, tau=1.0, grouping=grouping, mask=mask,
                        use_contrastive=use_contrastive)
    model = DKSEModel(params, SideSampling(2, 2), SideSampling(1, 3), grouping=grouping, mask=mask)
    users = np.array([0, 1, 2, 3, 0, 2])
    items = graph.item_node(np.array([0, 2, 3, 4, 3, 1]))
    labels = np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0])
    batches = model.sample_pairs(graph, users, items, np.random.default_rng(seed))

    def objective(leaves):
        return total_loss(model, leaves, users, items, labels, *batches, hyper).total

    return objective


def test_relative_error_uses_floor_for_tiny_gradients():
    assert relative_error(1e-9, 0.0) == pytest.approx(1e-6)
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "grouping,mask,use_contrastive",
    list(itertools.product(list(GroupingMode), MASKS, [True, False])),
    ids=lambda v: getattr(v, "label", getattr(v, "value", str(v))),
)
def test_gradients_match_central_differences(tiny_graph, grouping, mask, use_contrastive):
    params = _params(tiny_graph, seed=11)
    objective = _objective(tiny_graph, params, grouping, mask, use_contrastive)

    report = gradient_check(objective, params, h=1e-4, max_entries=12)

    assert report.max_relative_error < 1e-4, report.worst


def test_full_gradient_check_over_every_entry(tiny_graph):
    params = _params(tiny_graph, seed=3)
    objective = _objective(tiny_graph, params, GroupingMode.VERTICAL, AblationMask.full(), True, seed=4)

    report = gradient_check(objective, params)

    assert report.checked_entries == sum(array.size for _, array in params.items())
    assert set(report.per_tensor) == set(ParameterSet.names())
    assert report.passed(1e-4), report.worst


def test_check_leaves_parameters_as_found(tiny_graph):
    params = _params(tiny_graph, seed=1)
    before = params.copy()

    gradient_check(_objective(tiny_graph, params, GroupingMode.GLOBAL, AblationMask.full(), True), params,
                   max_entries=4)

    assert params.equals(before)


def test_check_flags_a_wrong_gradient(tiny_graph):
    params = _params(tiny_graph, seed=2)

    def objective(leaves):
        # The stop-gradient copy makes the tape miss half of d/dx x^2
        frozen = tape.Tensor(leaves["queries"].value.copy())
        return tape.sum(tape.mul(leaves["queries"], frozen))

    report = gradient_check(objective, params, names=["queries"])

    assert report.max_relative_error == pytest.approx(0.5, rel=1e-6)
