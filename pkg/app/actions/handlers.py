import logging
import time
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from app import settings
from app.actions.configurations import (
    AblateConfig,
    BenchConfig,
    EvaluateConfig,
    PrepareConfig,
    RunConfig,
    SweepAxis,
    SweepConfig,
    SweepSide,
    SynthConfig,
    TrainConfig,
    flat_hyper,
    format_config,
)
from app.actions.synthetic import generate_dataset, generate_synthetic
from app.graph import UnifiedGraph, route_count
from app.ingest import PreparedDataset, load_dataset, prepare_dataset, save_dataset
from app.metrics import MetricsReport, evaluate_model
from app.model import AblationMask, DKSEModel, GroupingMode, check_compatible, load_checkpoint, save_checkpoint
from app.services.activity_logger import activity_logger, log_activity
from app.services.state import RunDirectory
from app.services.utils import csv_text, seed_range
from app.train import AdamState, FitResult, HyperParams, fit, initial_params, train_step


logger = logging.getLogger(__name__)


def load_or_prepare(config: RunConfig) -> PreparedDataset:
    """The prepared split named by the config, or one built in memory from its raw source."""
    if config.dataset is not None:
        return load_dataset(config.dataset)
    options = dict(
        k_core=config.effective_k_core,
        ratios=config.ratios,
        negative_ratio=config.negative_ratio,
        eval_negative_ratio=config.eval_negative_ratio,
        seed=config.seed,
    )
    if config.synthetic is not None:
        return generate_dataset(config.synthetic, **options)
    return prepare_dataset(
        config.interactions, config.kg, config.alignment, policy=config.feedback_policy(), **options,
    )


def train_and_evaluate(prepared: PreparedDataset, graph: UnifiedGraph, hyper: HyperParams,
                       observer=None, on_epoch=None, part: str = "test") -> Tuple[FitResult, MetricsReport]:
    result = fit(prepared.split, graph, hyper, observer=observer, on_epoch=on_epoch)
    model = DKSEModel.from_hyper(result.params, hyper)
    report = evaluate_model(
        model, graph, prepared.split, part, seed=hyper.seed, dataset=prepared.tag, epoch=result.best_epoch,
    )
    return result, report


@activity_logger()
def action_prepare(action_config: PrepareConfig):
    prepared = load_or_prepare(action_config)
    stats = prepared.statistics()
    with RunDirectory(action_config.out) as run:
        save_dataset(prepared, run)
        run.write_text(settings.CONFIG_FILENAME, format_config(action_config.to_flat()))
    logger.info(f"Prepared dataset '{prepared.tag}' in {action_config.out}.")
    return {
        "statistics": stats,
        "summary": "".join(f"{key}={value}\n" for key, value in stats.items()),
    }


@activity_logger()
def action_train(action_config: TrainConfig):
    prepared = load_or_prepare(action_config)
    graph = prepared.build_graph()
    hyper = action_config.hyper
    lines = []
    with RunDirectory(action_config.out) as run:
        result, test_report = train_and_evaluate(
            prepared, graph, hyper, on_epoch=lambda record: lines.append(record.line()),
        )
        validation_report = evaluate_model(
            DKSEModel.from_hyper(result.params, hyper), graph, prepared.split, "validation",
            seed=hyper.seed, dataset=prepared.tag, epoch=result.best_epoch,
        )
        save_checkpoint(
            run,
            result.params,
            hyper=flat_hyper(hyper),
            seed=hyper.seed,
            extra={"dataset": prepared.tag, "best_epoch": result.best_epoch, "best_auc": result.best_auc},
        )
        run.write_text(settings.TRAIN_LOG_FILENAME, "".join(line + "\n" for line in lines))
        run.write_text(settings.VALIDATION_REPORT_FILENAME, validation_report.to_text())
        run.write_text(settings.REPORT_FILENAME, test_report.to_text())
        run.write_text(settings.CONFIG_FILENAME, format_config(action_config.to_flat()))
    return {
        "epochs": len(result.history),
        "best_epoch": result.best_epoch,
        "best_validation_auc": result.best_auc,
        "test": test_report.summary(),
        "summary": test_report.to_text(),
    }


@activity_logger()
def action_evaluate(action_config: EvaluateConfig):
    prepared = load_or_prepare(action_config)
    graph = prepared.build_graph()
    hyper = action_config.hyper
    params, metadata = load_checkpoint(action_config.checkpoint_path)
    check_compatible(params, graph.node_count, graph.relation_count, hyper.dim, hyper.n_queries)
    model = DKSEModel.from_hyper(params, hyper)
    report = evaluate_model(
        model,
        graph,
        prepared.split,
        "test",
        k_grid=action_config.k_grid,
        seed=int(metadata.get("seed", hyper.seed)),
        dataset=prepared.tag,
        epoch=metadata.get("extra", {}).get("best_epoch"),
    )
    with RunDirectory(action_config.out) as run:
        run.write_text(settings.REPORT_FILENAME, report.to_text())
        run.write_text(settings.TOPK_CSV_FILENAME, report.topk_csv())
    return {"test": report.summary(), "summary": report.to_text()}


def ablation_variants(hyper: HyperParams) -> List[Tuple[str, HyperParams]]:
    """The full model, one run per grouping mode and one per removed component (CL included)."""
    variants = [("full", hyper)]
    labels = {
        GroupingMode.GLOBAL: "Glo",
        GroupingMode.VERTICAL: "Ver",
        GroupingMode.HORIZONTAL: "Hor",
        GroupingMode.BASE: "base",
    }
    variants += [(label, hyper.copy(update={"grouping": mode})) for mode, label in labels.items()]
    variants += [
        (f"w/o {component}", hyper.copy(update={"mask": AblationMask.without(component)}))
        for component in ("U/V", "H", "R", "T")
    ]
    variants.append(("w/o CL", hyper.copy(update={"use_contrastive": False})))
    return variants


class WeightSpread:
    """Largest distance of any final route weight from the uniform weight of its row."""

    def __init__(self):
        self.value = 0.0

    def __call__(self, side, weights, batch):
        rows = weights[batch.valid]
        if rows.size:
            self.value = max(self.value, float(np.max(np.abs(rows - 1.0 / rows.shape[1]))))


ABLATION_HEADER = ["variant", "grouping", "mask", "contrastive", "seed", "auc", "acc", "f1", "weight_spread"]


@activity_logger()
def action_ablate(action_config: AblateConfig):
    prepared = load_or_prepare(action_config)
    graph = prepared.build_graph()
    rows = []
    for seed in seed_range(action_config.seed, action_config.repeats):
        for label, hyper in ablation_variants(action_config.hyper.copy(update={"seed": seed})):
            spread = WeightSpread()
            _, report = train_and_evaluate(prepared, graph, hyper, observer=spread)
            rows.append([
                label, hyper.grouping.value, hyper.mask.label, str(hyper.use_contrastive).lower(), seed,
                report.auc, report.acc, report.f1, spread.value,
            ])
            log_activity("ablate", f"Variant '{label}' (seed {seed}) reached test AUC {report.auc}.",
                         data={"variant": label, "seed": seed, "auc": report.auc})
    table = csv_text(ABLATION_HEADER, rows)
    with RunDirectory(action_config.out) as run:
        run.write_text(settings.ABLATION_FILENAME, table)
        run.write_text(settings.CONFIG_FILENAME, format_config(action_config.to_flat()))
    return {"rows": len(rows), "summary": table}


def sweep_cells(axis: SweepAxis) -> List[Dict[str, Any]]:
    axis = SweepAxis(axis)
    if axis == SweepAxis.DEPTH:
        return [{"l": depth} for depth in settings.SWEEP_DEPTHS]
    if axis == SweepAxis.FANOUT:
        return [{"l": depth, "n": size} for depth in settings.SWEEP_DEPTHS for size in settings.SWEEP_FANOUTS]
    if axis == SweepAxis.QUERIES:
        return [{"n_queries": n} for n in settings.SWEEP_QUERIES]
    if axis == SweepAxis.L2:
        return [{"l2": value} for value in settings.SWEEP_L2]
    return [{"dim": dim} for dim in settings.SWEEP_DIMS]


def apply_cell(hyper: HyperParams, cell: Dict[str, Any], side: SweepSide = SweepSide.BOTH) -> HyperParams:
    sides = {SweepSide.USER: ("u",), SweepSide.ITEM: ("v",), SweepSide.BOTH: ("u", "v")}[SweepSide(side)]
    update = {}
    for key, value in cell.items():
        if key in ("l", "n"):
            update.update({f"{key}_{s}": value for s in sides})
        else:
            update[key] = value
    return hyper.copy(update=update)


def split_by_route_budget(hyper: HyperParams, cells: List[Dict[str, Any]], side: SweepSide,
                          budget: int) -> Tuple[List[Dict[str, Any]], List[Dict[str, Any]]]:
    """(runnable cells, cells whose sampling exceeds ``budget`` routes per root on either side)"""
    runnable, oversized = [], []
    for cell in cells:
        routes = apply_cell(hyper, cell, side).route_counts()
        (runnable if max(routes) <= budget else oversized).append(cell)
    return runnable, oversized


@activity_logger()
def action_sweep(action_config: SweepConfig):
    prepared = load_or_prepare(action_config)
    graph = prepared.build_graph()
    cells = sweep_cells(action_config.axis)
    header = list(cells[0]) + ["seed", "auc"]
    cells, oversized = split_by_route_budget(
        action_config.hyper, cells, action_config.side, settings.DKSE_SWEEP_MAX_ROUTES,
    )
    for cell in oversized:
        logger.warning(f"Skipping sweep cell {cell}: more than {settings.DKSE_SWEEP_MAX_ROUTES} routes per root.")
    rows = []
    for seed in seed_range(action_config.seed, action_config.repeats):
        for cell in cells:
            hyper = apply_cell(action_config.hyper.copy(update={"seed": seed}), cell, action_config.side)
            _, report = train_and_evaluate(prepared, graph, hyper)
            rows.append(list(cell.values()) + [seed, report.auc])
    table = csv_text(header, rows)
    with RunDirectory(action_config.out) as run:
        run.write_text(settings.SWEEP_FILENAME, table)
        run.write_text(settings.CONFIG_FILENAME, format_config(action_config.to_flat()))
    return {"rows": len(rows), "skipped": len(oversized), "summary": table}


@activity_logger()
def action_synth(action_config: SynthConfig):
    data = generate_synthetic(action_config.synthetic)
    with RunDirectory(action_config.out) as run:
        data.write(run)
    counts = {
        "interactions": len(data.interactions),
        "triples": len(data.triples),
        "alignment": len(data.alignment),
    }
    return {**counts, "summary": "".join(f"{key}={value}\n" for key, value in counts.items())}


BENCH_HEADER = ["depth", "fanout", "routes", "dim", "seconds_per_step", "fitted", "within_tolerance"]


def time_steps(prepared: PreparedDataset, graph: UnifiedGraph, hyper: HyperParams, steps: int) -> float:
    """Median wall-clock seconds of one training step on a fixed batch."""
    pairs = prepared.split.train[:hyper.batch_size]
    users = np.array([graph.user_node(p.user) for p in pairs], dtype=np.int64)
    items = np.array([graph.item_node(p.item) for p in pairs], dtype=np.int64)
    labels = np.array([p.label for p in pairs], dtype=np.float64)
    model = DKSEModel.from_hyper(initial_params(graph, hyper), hyper)
    state = AdamState.fresh(model.params)
    rng = np.random.default_rng(hyper.seed)
    timings = []
    for _ in range(steps):
        started = time.perf_counter()
        train_step(model, graph, state, users, items, labels, hyper, rng)
        timings.append(time.perf_counter() - started)
    return float(np.median(timings))


def linear_fit(work, seconds, tolerance: float) -> Tuple[np.ndarray, np.ndarray]:
    """Least-squares line through (work, seconds); a cell passes when it is within tolerance of the line."""
    work, seconds = np.asarray(work, dtype=np.float64), np.asarray(seconds, dtype=np.float64)
    slope, intercept = np.polyfit(work, seconds, 1)
    fitted = np.maximum(slope * work + intercept, 0.0)
    return fitted, seconds <= tolerance * fitted


@activity_logger()
def action_bench(action_config: BenchConfig):
    prepared = load_or_prepare(action_config)
    graph = prepared.build_graph()
    cells = []
    for depth, fanout in settings.BENCH_SAMPLING:
        for dim in settings.BENCH_DIMS:
            hyper = action_config.hyper.copy(update={"l_u": depth, "l_v": depth, "n_u": fanout, "n_v": fanout, "dim": dim})
            seconds = time_steps(prepared, graph, hyper, action_config.steps)
            cells.append((depth, fanout, 2 * route_count(depth, fanout), dim, seconds))
            logger.info(f"depth={depth} fanout={fanout} dim={dim}: {seconds:.4f}s per step")
    # Training cost grows with routes times dimension
    fitted, within = linear_fit([c[2] * c[3] for c in cells], [c[4] for c in cells], action_config.tolerance)
    rows = [list(cell) + [float(f), str(bool(w)).lower()] for cell, f, w in zip(cells, fitted, within)]
    table = csv_text(BENCH_HEADER, rows)
    with RunDirectory(action_config.out) as run:
        run.write_text(settings.BENCH_FILENAME, table)
    return {"linear": bool(np.all(within)), "summary": table}
