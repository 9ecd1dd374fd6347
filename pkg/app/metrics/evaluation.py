import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from app.graph import UnifiedGraph
from app.ingest import DatasetSplit, LabeledPair
from app.model import ITEM_SIDE, USER_SIDE, DKSEModel
from app.services.errors import UndefinedMetricError
from .ranking import acc_f1, auc, ndcg_at_k, precision_at_k, topk_rank
from .report import MetricsReport


logger = logging.getLogger(__name__)


@dataclass
class EnrichedTables:
    """Enriched embeddings of every user and every item, indexed by dense id."""
    users: np.ndarray
    items: np.ndarray

    @classmethod
    def compute(cls, model: DKSEModel, graph: UnifiedGraph, seed: int) -> "EnrichedTables":
        user_nodes = np.arange(graph.n_users)
        item_nodes = graph.item_node(np.arange(graph.n_items))
        return cls(
            users=model.enriched_embeddings(graph, user_nodes, USER_SIDE, seed),
            items=model.enriched_embeddings(graph, item_nodes, ITEM_SIDE, seed),
        )

    def score(self, users, items) -> np.ndarray:
        users, items = np.asarray(users, dtype=np.int64), np.asarray(items, dtype=np.int64)
        return expit(np.einsum("bd,bd->b", self.users[users], self.items[items]))

    def score_all_items(self, user: int) -> np.ndarray:
        return expit(self.items @ self.users[user])


def evaluate_ctr(tables: EnrichedTables, pairs: Sequence[LabeledPair], threshold: float = 0.5) -> MetricsReport:
    users = [p.user for p in pairs]
    items = [p.item for p in pairs]
    labels = np.array([p.label for p in pairs], dtype=int)
    scores = tables.score(users, items)
    counts = {"pairs": len(pairs), "positives": int(labels.sum()), "negatives": int(len(labels) - labels.sum())}
    if not pairs:
        return MetricsReport(counts=counts)
    try:
        area = auc(scores, labels)
    except UndefinedMetricError as e:
        logger.warning(f"AUC left out of the report: {e}")
        area = None
    acc, f1 = acc_f1(scores, labels, threshold)
    return MetricsReport(auc=area, acc=acc, f1=f1, counts=counts)


def evaluate_topk(tables: EnrichedTables, split: DatasetSplit, k_grid: Sequence[int],
                  part: str = "test") -> Tuple[Dict[int, float], Dict[int, float], int]:
    """
    Full ranking over every item the user has no training positive for; relevance is the
    user's positives in ``part``.
    :return: (precision@K, ndcg@K, number of ranked users)
    """
    k_grid = sorted(k_grid)
    trained = split.positive_items_by_user("train")
    relevant_by_user = split.positive_items_by_user(part)
    all_items = np.arange(len(tables.items))
    precision = {k: 0.0 for k in k_grid}
    ndcg = {k: 0.0 for k in k_grid}
    ranked_users = 0
    for user in sorted(relevant_by_user):
        seen = np.fromiter(trained.get(user, ()), dtype=np.int64)
        candidates = all_items[~np.isin(all_items, seen)]
        scores = tables.score_all_items(user)[candidates]
        ranked = topk_rank(candidates, scores, k_grid[-1])
        relevant = relevant_by_user[user]
        for k in k_grid:
            precision[k] += precision_at_k(ranked, relevant, k)
            ndcg[k] += ndcg_at_k(ranked, relevant, k)
        ranked_users += 1
    if ranked_users:
        precision = {k: v / ranked_users for k, v in precision.items()}
        ndcg = {k: v / ranked_users for k, v in ndcg.items()}
    return precision, ndcg, ranked_users


def evaluate_model(
        model: DKSEModel,
        graph: UnifiedGraph,
        split: DatasetSplit,
        part: str = "test",
        k_grid: Optional[Sequence[int]] = None,
        seed: int = 0,
        dataset: str = "",
        epoch: Optional[int] = None,
) -> MetricsReport:
    """CTR metrics on the labeled pairs of ``part``, plus top-K metrics when a K grid is given."""
    tables = EnrichedTables.compute(model, graph, seed)
    report = evaluate_ctr(tables, split.parts()[part])
    if k_grid:
        precision, ndcg, ranked_users = evaluate_topk(tables, split, k_grid, part)
        report = report.copy(update={
            "precision_at_k": precision,
            "ndcg_at_k": ndcg,
            "counts": {**report.counts, "ranked_users": ranked_users},
        })
    return report.copy(update={"seed": seed, "epoch": epoch, "dataset": dataset})
