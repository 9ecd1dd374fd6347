import logging
import math
from typing import Iterable, Sequence, Set, Tuple

import numpy as np
from scipy.stats import rankdata
from sklearn.metrics import accuracy_score, f1_score

from app.services.errors import UndefinedMetricError


logger = logging.getLogger(__name__)


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """
    Probability that a random positive outranks a random negative, ties counting one half.
    Rank-sum form with average ranks for ties.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    positives = int(labels.sum())
    negatives = len(labels) - positives
    if positives == 0 or negatives == 0:
        raise UndefinedMetricError(
            f"AUC needs both classes, got {positives} positives and {negatives} negatives."
        )
    ranks = rankdata(scores, method="average")
    wins = ranks[labels].sum() - positives * (positives + 1) / 2.0
    return float(wins / (positives * negatives))


def acc_f1(scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5) -> Tuple[float, float]:
    if len(labels) == 0:
        raise ValueError("Accuracy and F1 need at least one scored pair.")
    predicted = (np.asarray(scores, dtype=np.float64) >= threshold).astype(int)
    truth = np.asarray(labels).astype(int)
    return (
        float(accuracy_score(truth, predicted)),
        float(f1_score(truth, predicted, zero_division=0)),
    )


def topk_rank(candidates: Sequence[int], scores: Sequence[float], k: int) -> list:
    """Candidates by score descending, ties by lower id first; the first ``k``."""
    _check_k(k)
    candidates = np.asarray(candidates, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((candidates, -scores))
    return candidates[order[:k]].tolist()


def precision_at_k(ranked: Sequence[int], relevant: Iterable[int], k: int) -> float:
    _check_k(k)
    relevant = set(relevant)
    return sum(1 for item in ranked[:k] if item in relevant) / k


def ndcg_at_k(ranked: Sequence[int], relevant: Iterable[int], k: int) -> float:
    """Binary gains, log2 discount; 0 when nothing is relevant."""
    _check_k(k)
    relevant: Set[int] = set(relevant)
    if not relevant:
        return 0.0
    dcg = sum(1.0 / math.log2(rank + 2) for rank, item in enumerate(ranked[:k]) if item in relevant)
    ideal = sum(1.0 / math.log2(rank + 2) for rank in range(min(k, len(relevant))))
    return dcg / ideal


def _check_k(k: int):
    if k <= 0:
        raise ValueError(f"K must be positive, got {k}.")
