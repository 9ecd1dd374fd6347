import logging
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from app.services.errors import InsufficientDataError
from .records import DatasetSplit, IdMap, InteractionRecord, LabeledPair


logger = logging.getLogger(__name__)


class FeedbackPolicyKind(str, Enum):
    THRESHOLD = "threshold"
    ALL_POSITIVE = "all-positive"


@dataclass(frozen=True)
class FeedbackPolicy:
    kind: FeedbackPolicyKind = FeedbackPolicyKind.ALL_POSITIVE
    threshold: float = 4.0
    # rating == threshold counts as positive
    inclusive: bool = True

    @classmethod
    def threshold_at(cls, threshold: float, inclusive: bool = True) -> "FeedbackPolicy":
        return cls(FeedbackPolicyKind.THRESHOLD, threshold, inclusive)

    @classmethod
    def all_positive(cls) -> "FeedbackPolicy":
        return cls(FeedbackPolicyKind.ALL_POSITIVE)


def to_implicit(records: Iterable[InteractionRecord], policy: FeedbackPolicy) -> List[LabeledPair]:
    """
    Turn explicit records into unique positive pairs over raw ids. Sub-threshold ratings are
    dropped; negatives are sampled later from unwatched items.
    """
    positives = []
    seen = set()
    for index, record in enumerate(records):
        if policy.kind == FeedbackPolicyKind.THRESHOLD:
            if record.rating is None:
                raise ValueError(
                    f"Record {index} ({record.user}, {record.item}) has no rating but the threshold policy needs one."
                )
            keep = record.rating >= policy.threshold if policy.inclusive else record.rating > policy.threshold
            if not keep:
                continue
        key = (record.user, record.item)
        if key not in seen:
            seen.add(key)
            positives.append(LabeledPair(record.user, record.item, 1))
    return positives


def k_core_filter(positives: Sequence[LabeledPair], k: int) -> List[LabeledPair]:
    """
    Keep the interactions of the k-core of the user-item graph: every kept user and item has at
    least k kept interactions. Positives are unique pairs, as produced by ``to_implicit``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}.")
    graph = nx.Graph()
    graph.add_edges_from((("user", p.user), ("item", p.item)) for p in positives)
    core = nx.k_core(graph, k)
    kept = [p for p in positives if core.has_edge(("user", p.user), ("item", p.item))]
    logger.info(f"{k}-core filter kept {len(kept)} of {len(positives)} positives.")
    return kept


def split(positives: Sequence[LabeledPair], ratios: Tuple[float, float, float], seed) -> DatasetSplit:
    """
    Shuffle the positives and cut them into train/validation/test. Raw ids are mapped to dense
    user and item ids (sorted raw order).
    """
    if len(ratios) != 3 or min(ratios) <= 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"Split ratios must be three positive numbers summing to 1, got {ratios}.")
    total = len(positives)
    if total < 3:
        raise InsufficientDataError(f"At least 3 positives are needed to split, got {total}.")

    users = IdMap(sorted({p.user for p in positives}))
    items = IdMap(sorted({p.item for p in positives}))
    dense = [LabeledPair(users.lookup(p.user), items.lookup(p.item), 1) for p in positives]

    order = np.random.default_rng(seed).permutation(total)
    n_train = math.floor(total * ratios[0] + 1e-9)
    n_valid = math.floor(total * ratios[1] + 1e-9)
    shuffled = [dense[i] for i in order]
    return DatasetSplit(
        train=shuffled[:n_train],
        validation=shuffled[n_train:n_train + n_valid],
        test=shuffled[n_train + n_valid:],
        users=users,
        items=items,
    )


def sample_negatives(
        positives: Sequence[LabeledPair],
        all_items: Sequence[int],
        ratio: int,
        seed,
        known_positives: Optional[Dict[int, Set[int]]] = None,
) -> List[LabeledPair]:
    """
    Draw ``ratio`` unwatched items per positive pair, distinct within one user's draw.
    :param known_positives: user -> every positive item of that user across all splits
    """
    if ratio < 1:
        raise ValueError(f"Negative ratio must be >= 1, got {ratio}.")
    if known_positives is None:
        known_positives = {}
        for pair in positives:
            known_positives.setdefault(pair.user, set()).add(pair.item)
    all_items = np.asarray(sorted(set(all_items)), dtype=np.int64)
    wanted = Counter(p.user for p in positives if p.label == 1)
    rng = np.random.default_rng(seed)

    negatives = []
    for user in sorted(wanted):
        watched = np.fromiter(known_positives.get(user, ()), dtype=np.int64)
        candidates = all_items[~np.isin(all_items, watched)]
        needed = wanted[user] * ratio
        if len(candidates) == 0:
            logger.warning(f"User {user} has interacted with every item and contributes no negatives.")
            continue
        if len(candidates) < needed:
            logger.warning(f"User {user} has only {len(candidates)} unwatched items for {needed} negatives.")
        drawn = rng.choice(candidates, size=min(needed, len(candidates)), replace=False)
        negatives.extend(LabeledPair(user, int(item), 0) for item in drawn)
    return negatives


def add_negatives(data: DatasetSplit, ratio: int = 1, eval_ratio: int = 1, seed=0) -> DatasetSplit:
    """Append sampled negatives to every part of the split; each part gets its own stream."""
    clicked = data.positive_items_by_user()
    all_items = range(len(data.items))
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = root.spawn(3)
    parts = {}
    for stream, (name, pairs) in zip(streams, data.parts().items()):
        positives = [p for p in pairs if p.label == 1]
        negatives = sample_negatives(
            positives,
            all_items,
            ratio if name == "train" else eval_ratio,
            np.random.default_rng(stream),
            known_positives=clicked,
        )
        parts[name] = positives + negatives
    return DatasetSplit(
        train=parts["train"],
        validation=parts["validation"],
        test=parts["test"],
        users=data.users,
        items=data.items,
    )
