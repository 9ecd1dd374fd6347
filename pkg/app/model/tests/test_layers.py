import itertools
import math

import numpy as np
import pytest

from app.graph import ChainRoute
from app.model import (
    AblationMask,
    GroupingMode,
    NormalizationMode,
    cells_for_routes,
    enrich,
    evaluate_routes,
    group_normalize,
    kept_positions,
    knowledge_selector,
    predict,
    route_elements,
    route_score,
)


E = math.e


def _select(elements, query, weight=None, bias=None):
    elements = np.asarray(elements, dtype=float)
    d = elements.shape[-1]
    weight = np.eye(d) if weight is None else weight
    bias = np.zeros(d) if bias is None else bias
    selected, attention = knowledge_selector(elements, np.atleast_2d(query), weight, bias)
    return selected.value[0], attention.value[0]


def test_full_mask_keeps_whole_route():
    assert route_elements(ChainRoute((5, 2, 9)), AblationMask()) == [5, 2, 9]


def test_mask_without_relations():
    assert route_elements(ChainRoute((5, 2, 9)), AblationMask.without("R")) == [5, 9]


def test_mask_without_heads_on_depth_two_route():
    route = ChainRoute((7, 1, 20, 3, 21))

    assert route_elements(route, AblationMask.without("H")) == [7, 1, 3, 21]


def test_terminal_survives_a_mask_that_empties_the_route():
    mask = AblationMask(include_user_item=False, include_relation=False, include_head=True, include_tail=False)

    assert route_elements(ChainRoute((5, 2, 9)), mask) == [9]


def test_mask_needs_a_component():
    with pytest.raises(ValueError):
        AblationMask(include_user_item=False, include_head=False, include_relation=False, include_tail=False)


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_route_element_count_follows_classification(depth):
    for flags in itertools.product([True, False], repeat=4):
        if not any(flags):
            continue
        mask = AblationMask(
            include_user_item=flags[0], include_head=flags[1], include_relation=flags[2], include_tail=flags[3],
        )
        expected = flags[0] * 1 + flags[1] * (depth - 1) + flags[2] * depth + flags[3] * 1
        route = ChainRoute(tuple(range(2 * depth + 1)))
        assert len(route_elements(route, mask)) == (expected or 1)
        assert kept_positions(depth, mask) == sorted(kept_positions(depth, mask))


def test_selector_on_single_element():
    selected, attention = _select([[0.3, -0.2]], [1.0, 0.0])

    np.testing.assert_allclose(attention, [1.0])
    np.testing.assert_allclose(selected, [0.3, -0.2])


def test_selector_hand_computed_softmax():
    selected, attention = _select([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0])

    np.testing.assert_allclose(attention, [E / (E + 1), 1 / (E + 1)], atol=1e-12)
    np.testing.assert_allclose(selected, [0.7311, 0.2689], atol=1e-4)


def test_selector_on_identical_elements_ignores_the_query():
    rng = np.random.default_rng(0)
    element = rng.normal(size=4)

    selected, _ = _select([element] * 3, rng.normal(size=4), rng.normal(size=(4, 4)), rng.normal(size=4))

    np.testing.assert_allclose(selected, element)


def test_selector_stays_in_the_convex_hull():
    rng = np.random.default_rng(1)
    for _ in range(200):
        elements = rng.normal(size=(rng.integers(1, 8), 5))
        selected, _ = _select(elements, rng.normal(size=5), rng.normal(size=(5, 5)), rng.normal(size=5))
        assert np.all(selected >= elements.min(axis=0) - 1e-12)
        assert np.all(selected <= elements.max(axis=0) + 1e-12)


def test_negative_bias_gates_every_key():
    rng = np.random.default_rng(2)
    elements = rng.normal(size=(4, 3))

    selected, attention = _select(elements, rng.normal(size=3), rng.normal(size=(3, 3)), np.full(3, -100.0))

    np.testing.assert_allclose(attention, np.full(4, 0.25))
    np.testing.assert_allclose(selected, elements.mean(axis=0))


def test_selector_ignores_invalid_elements():
    elements = np.array([[[1.0, 0.0], [0.0, 1.0], [50.0, 50.0]]])

    selected, attention = knowledge_selector(
        elements, [[1.0, 0.0]], np.eye(2), np.zeros(2), valid=np.array([[True, True, False]]),
    )

    assert attention.value[0, 0, 2] == 0.0
    np.testing.assert_allclose(selected.value[0, 0], [E / (E + 1), 1 / (E + 1)])


def test_ratio_normalization_divides_by_raw_sum():
    _, attention = knowledge_selector(
        [[1.0, 0.0], [0.0, 1.0]], [[3.0, 1.0]], np.eye(2), np.zeros(2), normalization=NormalizationMode.RATIO,
    )

    np.testing.assert_allclose(attention.value[0], [0.75, 0.25])


def test_route_score_constant_map():
    assert route_score([0.4, -7.0], [[0.0, 0.0]], [0.3]).value == pytest.approx(0.3)


def test_route_score_dot_product():
    assert route_score([0.5, 0.25], [[1.0, 1.0]], [0.0]).value == pytest.approx(0.75)


def test_route_score_is_linear_without_bias():
    rng = np.random.default_rng(3)
    feature, weight = rng.normal(size=6), rng.normal(size=(1, 6))

    scaled = route_score(2.5 * feature, weight, [0.0]).value
    assert scaled == pytest.approx(2.5 * route_score(feature, weight, [0.0]).value)


def _routes_with_depths(*depths):
    routes = []
    for n, depth in enumerate(depths):
        elements = [0]
        for k in range(depth):
            elements += [0, 10 * (n + 1) + k]
        routes.append(ChainRoute(tuple(elements)))
    return routes


def _normalize(scores, routes, mode):
    cells = cells_for_routes(routes, mode)
    return group_normalize(np.asarray(scores, dtype=float), cells, np.ones(len(routes), dtype=bool), mode).value


def test_base_mode_is_uniform():
    routes = _routes_with_depths(1, 1, 2, 2)

    np.testing.assert_allclose(_normalize([3.0, -1.0, 0.0, 9.0], routes, GroupingMode.BASE), [0.25] * 4)


def test_global_mode_with_equal_scores():
    routes = _routes_with_depths(1, 1, 1, 2, 2)

    np.testing.assert_allclose(_normalize([0.7] * 5, routes, GroupingMode.GLOBAL), [0.2] * 5)


def test_horizontal_mode_cells_by_depth():
    routes = _routes_with_depths(1, 1, 2)

    weights = _normalize([1.0, 0.0, 123.0], routes, GroupingMode.HORIZONTAL)

    np.testing.assert_allclose(weights, [E / (E + 1) / 2, 1 / (E + 1) / 2, 0.5])


def test_vertical_mode_cells_by_first_hop():
    routes = [ChainRoute((0, 0, 4)), ChainRoute((0, 0, 5)), ChainRoute((0, 0, 4, 1, 8))]

    weights = _normalize([1.0, 5.0, 0.0], routes, GroupingMode.VERTICAL)

    np.testing.assert_allclose(weights, [E / (E + 1) / 2, 0.5, 1 / (E + 1) / 2])


@pytest.mark.parametrize("mode", list(GroupingMode))
def test_weights_sum_to_one_in_every_mode(mode):
    rng = np.random.default_rng(4)
    for _ in range(1000):
        depths = rng.integers(1, 4, size=rng.integers(1, 10))
        routes = [
            ChainRoute(tuple([0] + [int(x) for x in rng.integers(0, 5, size=2 * int(d))]))
            for d in depths
        ]
        weights = _normalize(rng.normal(size=len(routes)), routes, mode)
        assert weights.sum() == pytest.approx(1.0, abs=1e-6)


def test_evaluate_without_routes_is_zero():
    np.testing.assert_array_equal(evaluate_routes(np.zeros((0, 3)), np.zeros(0)).value, np.zeros(3))


def test_evaluate_single_route():
    np.testing.assert_allclose(evaluate_routes([[0.2, 0.4]], [1.0]).value, [0.2, 0.4])


def test_evaluate_weighted_sum():
    np.testing.assert_allclose(evaluate_routes([[1.0, 0.0], [0.0, 1.0]], [0.75, 0.25]).value, [0.75, 0.25])


def test_enrich_adds_the_neighborhood():
    np.testing.assert_allclose(enrich([1.0, 2.0], [0.5, -1.0]).value, [1.5, 1.0])
    np.testing.assert_allclose(enrich([1.0, 2.0], [0.0, 0.0]).value, [1.0, 2.0])


def test_enrich_commutes_with_permutation():
    rng = np.random.default_rng(5)
    e, n = rng.normal(size=5), rng.normal(size=5)
    order = rng.permutation(5)

    np.testing.assert_array_equal(enrich(e[order], n[order]).value, enrich(e, n).value[order])


@pytest.mark.parametrize("user,item,expected", [
    ([1.0, 0.0], [0.0, 1.0], 0.5),
    ([math.log(3), 0.0], [1.0, 0.0], 0.75),
    ([10.0], [1.0], 0.9999546),
])
def test_predict(user, item, expected):
    assert predict(user, item).value == pytest.approx(expected, abs=1e-7)


def test_predict_is_finite_for_huge_dots():
    assert 0.0 <= predict([1e4], [1e4]).value <= 1.0
    assert np.isfinite(predict([-1e4], [1e4]).value)
