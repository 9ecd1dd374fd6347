import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from app.model import GradientTape, ParameterSet, Tensor


logger = logging.getLogger(__name__)


# Gradients smaller than this are compared in absolute terms
RELATIVE_FLOOR = 1e-3

Objective = Callable[[Dict[str, Tensor]], Tensor]


def relative_error(analytic: float, numeric: float, floor: float = RELATIVE_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


@dataclass
class GradientCheckReport:
    max_relative_error: float = 0.0
    per_tensor: Dict[str, float] = field(default_factory=dict)
    checked_entries: int = 0
    worst: Optional[tuple] = None

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_relative_error < tolerance


def gradient_check(
        objective: Objective,
        params: ParameterSet,
        h: float = 1e-4,
        names: Optional[Sequence[str]] = None,
        max_entries: Optional[int] = None,
        seed: int = 0,
) -> GradientCheckReport:
    """
    Compare tape gradients of a scalar ``objective`` with central differences.

    ``objective`` receives a dict of parameter tensors and must be deterministic. With
    ``max_entries``, each tensor is probed at that many random entries, always including its
    largest-gradient entry.
    """
    leaves = params.leaves()
    with GradientTape() as recorded:
        loss = objective(leaves)
    analytic = dict(zip(leaves.keys(), recorded.gradient(loss, list(leaves.values()))))

    rng = np.random.default_rng(seed)
    report = GradientCheckReport()
    for name in names or params.names():
        array = getattr(params, name)
        entries = list(np.ndindex(array.shape))
        if max_entries is not None and len(entries) > max_entries:
            largest = np.unravel_index(int(np.argmax(np.abs(analytic[name]))), array.shape)
            picked = rng.choice(len(entries), size=max_entries - 1, replace=False)
            entries = [largest] + [entries[i] for i in picked if entries[i] != largest]
        worst = 0.0
        for index in entries:
            original = array[index]
            array[index] = original + h
            up = float(objective(_constants(params)).value)
            array[index] = original - h
            down = float(objective(_constants(params)).value)
            array[index] = original
            numeric = (up - down) / (2.0 * h)
            error = relative_error(float(analytic[name][index]), numeric)
            if error > report.max_relative_error:
                report.max_relative_error = error
                report.worst = (name, index, float(analytic[name][index]), numeric)
            worst = max(worst, error)
        report.per_tensor[name] = worst
        report.checked_entries += len(entries)
    logger.info(
        f"Gradient check over {report.checked_entries} entries: max relative error {report.max_relative_error:.3e}."
    )
    return report


def _constants(params: ParameterSet) -> Dict[str, Tensor]:
    return {name: Tensor(array, name=name) for name, array in params.items()}
