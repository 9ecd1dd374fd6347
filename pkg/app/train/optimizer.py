import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from app.model import GradientTape, ParameterSet, Tensor
from app.services.errors import NonFiniteValueError


logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    first: Dict[str, np.ndarray]
    second: Dict[str, np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, params: ParameterSet, **kwargs) -> "AdamState":
        return cls(
            first={name: np.zeros_like(array) for name, array in params.items()},
            second={name: np.zeros_like(array) for name, array in params.items()},
            **kwargs,
        )


def backward(recorded: GradientTape, loss: Tensor, leaves: Dict[str, Tensor]) -> Dict[str, np.ndarray]:
    """Gradient of ``loss`` for every parameter tensor; raises NonFiniteValueError on inf/nan."""
    grads = recorded.gradient(loss, list(leaves.values()))
    return dict(zip(leaves.keys(), grads))


def adam_step(params: ParameterSet, grads: Dict[str, np.ndarray], state: AdamState,
              learning_rate: float) -> Tuple[ParameterSet, AdamState]:
    """
    One bias-corrected Adam update, written into ``params`` only once every new value is known
    to be finite.
    """
    step = state.step + 1
    first, second, updated = {}, {}, {}
    for name, array in params.items():
        grad = grads[name]
        if grad.shape != array.shape:
            raise ValueError(f"Gradient for '{name}' has shape {grad.shape}, parameter has {array.shape}.")
        first[name] = state.beta1 * state.first[name] + (1.0 - state.beta1) * grad
        second[name] = state.beta2 * state.second[name] + (1.0 - state.beta2) * grad * grad
        corrected_first = first[name] / (1.0 - state.beta1 ** step)
        corrected_second = second[name] / (1.0 - state.beta2 ** step)
        updated[name] = array - learning_rate * corrected_first / (np.sqrt(corrected_second) + state.eps)
        if not np.all(np.isfinite(updated[name])):
            raise NonFiniteValueError(f"Adam step {step} produced non-finite values in '{name}'.")

    for name, array in params.items():
        array[...] = updated[name]
    state.first, state.second, state.step = first, second, step
    return params, state
