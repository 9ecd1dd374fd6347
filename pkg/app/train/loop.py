import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from app.graph import UnifiedGraph
from app.ingest import DatasetSplit
from app.metrics import MetricsReport, evaluate_model
from app.model import DKSEModel, GradientTape, ParameterSet
from app.model.dkse import RouteObserver
from .hyper import HyperParams
from .losses import total_loss
from .optimizer import AdamState, adam_step, backward


logger = logging.getLogger(__name__)
# One key=value line per epoch
epoch_logger = logging.getLogger("app.train.epochs")


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    bce: float
    cl: float
    l2: float
    val_auc: Optional[float]
    elapsed: float
    report: Optional[MetricsReport] = None

    def line(self) -> str:
        val_auc = "nan" if self.val_auc is None else f"{self.val_auc:.6f}"
        return (
            f"epoch={self.epoch} loss={self.loss:.6f} bce={self.bce:.6f} cl={self.cl:.6f} "
            f"l2={self.l2:.6f} val_auc={val_auc} elapsed={self.elapsed:.3f}"
        )


@dataclass
class FitResult:
    params: ParameterSet
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    best_auc: Optional[float] = None

    @property
    def losses(self) -> List[float]:
        return [record.loss for record in self.history]


def initial_params(graph: UnifiedGraph, hyper: HyperParams) -> ParameterSet:
    return ParameterSet.initialize(
        graph.node_count, graph.relation_count, hyper.dim, hyper.n_queries, np.random.SeedSequence(hyper.seed),
    )


def train_step(model: DKSEModel, graph: UnifiedGraph, state: AdamState, users, items, labels,
               hyper: HyperParams, rng) -> Dict[str, float]:
    """Sample, forward, backward and one Adam update on ``model.params``; returns the loss terms."""
    user_batch, item_batch = model.sample_pairs(graph, users, items, rng)
    leaves = model.leaves()
    with GradientTape() as recorded:
        terms = total_loss(model, leaves, users, items, labels, user_batch, item_batch, hyper)
    grads = backward(recorded, terms.total, leaves)
    adam_step(model.params, grads, state, hyper.learning_rate)
    return terms.values()


def fit(
        split: DatasetSplit,
        graph: UnifiedGraph,
        hyper: HyperParams,
        observer: Optional[RouteObserver] = None,
        on_epoch: Optional[Callable[[EpochRecord], None]] = None,
        params: Optional[ParameterSet] = None,
) -> FitResult:
    """
    Minibatch Adam over the training pairs with fresh neighborhoods every batch.

    The graph must be built from training positives only. Validation AUC is computed after every
    epoch; training stops after ``hyper.patience`` epochs without improvement and the parameters
    of the best epoch are returned.
    """
    params = params if params is not None else initial_params(graph, hyper)
    model = DKSEModel.from_hyper(params, hyper, observer)
    result = FitResult(params=params.copy())
    if hyper.epochs == 0 or not split.train:
        return result

    users = np.array([graph.user_node(p.user) for p in split.train], dtype=np.int64)
    items = np.array([graph.item_node(p.item) for p in split.train], dtype=np.int64)
    labels = np.array([p.label for p in split.train], dtype=np.float64)
    state = AdamState.fresh(params)
    best_score, stale = -math.inf, 0

    for epoch in range(1, hyper.epochs + 1):
        started = time.perf_counter()
        rng = np.random.default_rng(np.random.SeedSequence([hyper.seed, epoch]))
        order = rng.permutation(len(labels))
        sums = {"loss": 0.0, "bce": 0.0, "cl": 0.0, "l2": 0.0}
        batches = 0
        for start in range(0, len(order), hyper.batch_size):
            picked = order[start:start + hyper.batch_size]
            terms = train_step(model, graph, state, users[picked], items[picked], labels[picked], hyper, rng)
            for key, value in terms.items():
                sums[key] += value
            batches += 1

        report = evaluate_model(model, graph, split, part="validation", seed=hyper.seed, epoch=epoch)
        record = EpochRecord(
            epoch=epoch,
            **{key: value / batches for key, value in sums.items()},
            val_auc=report.auc,
            elapsed=time.perf_counter() - started,
            report=report,
        )
        result.history.append(record)
        epoch_logger.info(record.line())
        if on_epoch is not None:
            on_epoch(record)

        score = report.auc if report.auc is not None else -math.inf
        if result.best_epoch is None or score > best_score:
            best_score, stale = score, 0
            result.params, result.best_epoch, result.best_auc = params.copy(), epoch, report.auc
        else:
            stale += 1
            if stale >= hyper.patience:
                logger.info(f"No validation AUC gain for {stale} epochs, stopping after epoch {epoch}.")
                break

    logger.info(f"Best validation AUC {result.best_auc} at epoch {result.best_epoch}.")
    return result
