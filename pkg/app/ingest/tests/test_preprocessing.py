import numpy as np
import pytest

from app.ingest import (
    FeedbackPolicy,
    InteractionRecord,
    LabeledPair,
    add_negatives,
    k_core_filter,
    sample_negatives,
    split,
    to_implicit,
)
from app.services.errors import InsufficientDataError


def _pairs(*raw):
    return [LabeledPair(u, i, 1) for u, i in raw]


def test_rating_above_threshold_is_positive():
    positives = to_implicit([InteractionRecord("u", "i", 5.0)], FeedbackPolicy.threshold_at(4))

    assert positives == [LabeledPair("u", "i", 1)]


def test_rating_below_threshold_is_dropped():
    assert to_implicit([InteractionRecord("u", "i", 3.0)], FeedbackPolicy.threshold_at(4)) == []


def test_exact_threshold_handling_is_configurable():
    record = [InteractionRecord("u", "i", 4.0)]

    assert len(to_implicit(record, FeedbackPolicy.threshold_at(4))) == 1
    assert to_implicit(record, FeedbackPolicy.threshold_at(4, inclusive=False)) == []


def test_all_positive_policy_keeps_everything():
    records = [InteractionRecord("u", "i", 1.0), InteractionRecord("u", "j")]

    assert len(to_implicit(records, FeedbackPolicy.all_positive())) == 2


def test_threshold_policy_needs_ratings():
    with pytest.raises(ValueError):
        to_implicit([InteractionRecord("u", "i")], FeedbackPolicy.threshold_at(4))


def test_repeated_records_become_one_positive():
    records = [InteractionRecord("u", "i", 5.0), InteractionRecord("u", "i", 4.0)]

    assert to_implicit(records, FeedbackPolicy.all_positive()) == [LabeledPair("u", "i", 1)]


def test_k_core_of_empty_input():
    assert k_core_filter([], 20) == []


def test_k_core_cascades_to_empty():
    positives = _pairs(("A", "i1"), ("A", "i2"), ("B", "i1"))

    assert k_core_filter(positives, 2) == []


def test_k_core_with_k_one_is_identity():
    positives = _pairs(("A", "i1"), ("B", "i2"))

    assert k_core_filter(positives, 1) == positives


def test_k_core_fixed_point_and_idempotence():
    rng = np.random.default_rng(5)
    positives = _pairs(*{(f"u{rng.integers(40)}", f"i{rng.integers(30)}") for _ in range(600)})

    filtered = k_core_filter(positives, 5)

    users = {p.user for p in filtered}
    items = {p.item for p in filtered}
    assert all(sum(p.user == u for p in filtered) >= 5 for u in users)
    assert all(sum(p.item == i for p in filtered) >= 5 for i in items)
    assert k_core_filter(filtered, 5) == filtered


def _peel(positives, k):
    current = list(positives)
    while True:
        users = {u: sum(p.user == u for p in current) for u in {p.user for p in current}}
        items = {i: sum(p.item == i for p in current) for i in {p.item for p in current}}
        kept = [p for p in current if users[p.user] >= k and items[p.item] >= k]
        if len(kept) == len(current):
            return kept
        current = kept


@pytest.mark.parametrize("k", [2, 3, 4])
def test_k_core_matches_repeated_peeling(k):
    rng = np.random.default_rng(k)
    positives = _pairs(*sorted({(f"u{rng.integers(25)}", f"i{rng.integers(20)}") for _ in range(150)}))

    assert k_core_filter(positives, k) == _peel(positives, k)


def test_k_core_keeps_users_and_items_with_the_same_raw_id_apart():
    # user "1" and item "1" are different nodes; merged they would reach degree 2
    positives = _pairs(("1", "1"), ("1", "2"), ("3", "1"))

    assert k_core_filter(positives, 2) == []


def test_split_sizes_for_hundred_positives():
    positives = _pairs(*[(f"u{n % 10}", f"i{n}") for n in range(100)])

    data = split(positives, (0.6, 0.2, 0.2), seed=1)

    assert (len(data.train), len(data.validation), len(data.test)) == (60, 20, 20)


def test_split_floor_then_remainder():
    positives = _pairs(*[("u", f"i{n}") for n in range(5)])

    data = split(positives, (0.6, 0.2, 0.2), seed=1)

    assert (len(data.train), len(data.validation), len(data.test)) == (3, 1, 1)


def test_split_partitions_its_input():
    positives = _pairs(*[(f"u{n % 7}", f"i{n % 13}") for n in range(91)])

    data = split(positives, (0.6, 0.2, 0.2), seed=3)

    restored = [
        (data.users.raw(p.user), data.items.raw(p.item))
        for p in data.train + data.validation + data.test
    ]
    assert sorted(restored) == sorted((p.user, p.item) for p in positives)
    assert len(set(restored)) == len(restored)


def test_split_is_deterministic():
    positives = _pairs(*[(f"u{n % 4}", f"i{n}") for n in range(30)])

    assert split(positives, (0.6, 0.2, 0.2), seed=9) == split(positives, (0.6, 0.2, 0.2), seed=9)


def test_split_needs_three_positives():
    with pytest.raises(InsufficientDataError):
        split(_pairs(("u", "a"), ("u", "b")), (0.6, 0.2, 0.2), seed=0)


def test_split_ratios_are_checked():
    with pytest.raises(ValueError):
        split(_pairs(("u", "a"), ("u", "b"), ("u", "c")), (0.5, 0.2, 0.2), seed=0)


def test_forced_negative():
    positives = [LabeledPair(0, item, 1) for item in range(4)]

    negatives = sample_negatives(positives[:1], range(5), ratio=1, seed=0,
                                 known_positives={0: {0, 1, 2, 3}})

    assert negatives == [LabeledPair(0, 4, 0)]


def test_negative_count_matches_ratio():
    positives = [LabeledPair(u, u, 1) for u in range(10)]

    assert len(sample_negatives(positives, range(50), ratio=1, seed=0)) == 10
    assert len(sample_negatives(positives, range(50), ratio=3, seed=0)) == 30


def test_user_with_every_item_contributes_nothing(caplog):
    positives = [LabeledPair(0, item, 1) for item in range(3)]

    assert sample_negatives(positives, range(3), ratio=1, seed=0) == []
    assert "every item" in caplog.text


def test_negatives_never_hit_any_positive(toy_dataset):
    clicked = toy_dataset.positive_items_by_user()
    for pair in toy_dataset.train + toy_dataset.validation + toy_dataset.test:
        if pair.label == 0:
            assert pair.item not in clicked.get(pair.user, set())


def test_negatives_are_distinct_per_user():
    positives = [LabeledPair(0, 0, 1), LabeledPair(0, 1, 1), LabeledPair(0, 2, 1)]

    negatives = sample_negatives(positives, range(8), ratio=1, seed=4)

    assert len({n.item for n in negatives}) == 3


def test_add_negatives_keeps_positive_parts(toy_positive_split):
    data = add_negatives(toy_positive_split, ratio=1, eval_ratio=1, seed=0)

    for name, pairs in data.parts().items():
        positives = [p for p in pairs if p.label == 1]
        assert positives == toy_positive_split.parts()[name]
        assert sum(p.label == 0 for p in pairs) <= len(positives)
