"""
Reverse-mode differentiation over numpy arrays.

Operations executed inside a ``GradientTape`` context are recorded in creation order together
with their vector-Jacobian products; ``GradientTape.gradient`` replays them backwards. Outside a
tape nothing is recorded, so the same model code runs as plain inference.
"""
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from app.services.errors import NonFiniteValueError


logger = logging.getLogger(__name__)


ArrayLike = Union["Tensor", np.ndarray, float, int]


class Tensor:
    __slots__ = ("value", "requires_grad", "name", "parents", "backward")

    def __init__(self, value, requires_grad: bool = False, name: Optional[str] = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.parents: Tuple["Tensor", ...] = ()
        self.backward: Optional[Callable] = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"


_active: List["GradientTape"] = []


class GradientTape:
    """Records differentiable operations for one backward pass."""

    def __init__(self):
        self.operations: List[Tensor] = []

    def __enter__(self):
        _active.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _active.remove(self)
        return False

    def record(self, node: Tensor):
        self.operations.append(node)

    def gradient(self, target: Tensor, sources: Sequence[Tensor], check_finite: bool = True) -> List[np.ndarray]:
        """
        Gradients of a scalar ``target`` with respect to every source; sources the target does not
        depend on get zeros.
        """
        if target.value.size != 1:
            raise ValueError(f"Gradients need a scalar target, got shape {target.shape}.")
        grads: Dict[int, np.ndarray] = {id(target): np.ones_like(target.value)}
        for node in reversed(self.operations):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            for parent, parent_grad in zip(node.parents, node.backward(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + parent_grad if key in grads else parent_grad
        result = []
        for source in sources:
            grad = grads.get(id(source))
            grad = np.zeros_like(source.value) if grad is None else np.broadcast_to(grad, source.shape).copy()
            if check_finite and not np.all(np.isfinite(grad)):
                raise NonFiniteValueError(f"Non-finite gradient for tensor '{source.name}'.")
            result.append(grad)
        return result


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(value, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    out = Tensor(value)
    if _active and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.parents = tuple(parents)
        out.backward = backward
        _active[-1].record(out)
    return out


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# Elementwise arithmetic

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _result(
        a.value + b.value, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _result(
        a.value - b.value, (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _result(
        a.value * b.value, (a, b),
        lambda g: (_unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)),
    )


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    value = a.value / b.value
    return _result(
        value, (a, b),
        lambda g: (_unbroadcast(g / b.value, a.shape), _unbroadcast(-g * value / b.value, b.shape)),
    )


def neg(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _result(-a.value, (a,), lambda g: (-g,))


def relu(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    # Subgradient 0 at exactly 0
    active = a.value > 0
    return _result(np.where(active, a.value, 0.0), (a,), lambda g: (g * active,))


def exp(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    value = np.exp(a.value)
    return _result(value, (a,), lambda g: (g * value,))


def log(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _result(np.log(a.value), (a,), lambda g: (g / a.value,))


def sigmoid(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    value = expit(a.value)
    return _result(value, (a,), lambda g: (g * value * (1.0 - value),))


def clip(a: ArrayLike, low: float, high: float) -> Tensor:
    a = as_tensor(a)
    inside = (a.value > low) & (a.value < high)
    return _result(np.clip(a.value, low, high), (a,), lambda g: (g * inside,))


# Reductions and shape

def sum(a: ArrayLike, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape),)

    return _result(a.value.sum(axis=axis, keepdims=keepdims), (a,), backward)


def mean(a: ArrayLike, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.value.size if axis is None else np.prod([a.shape[x] for x in np.atleast_1d(axis)])
    return div(sum(a, axis=axis, keepdims=keepdims), float(count))


def reshape(a: ArrayLike, shape) -> Tensor:
    a = as_tensor(a)
    return _result(a.value.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: ArrayLike, axes: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    inverse = np.argsort(axes)
    return _result(np.transpose(a.value, axes), (a,), lambda g: (np.transpose(g, inverse),))


def concat(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _result(
        np.concatenate([t.value for t in tensors], axis=axis), tensors,
        lambda g: tuple(np.split(g, bounds, axis=axis)),
    )


def take(table: ArrayLike, index) -> Tensor:
    """Row lookup ``table[index]``; rows looked up several times accumulate gradient."""
    table = as_tensor(table)
    index = np.asarray(index, dtype=np.int64)

    def backward(g):
        grad = np.zeros_like(table.value)
        np.add.at(grad, index.reshape(-1), g.reshape((-1,) + table.shape[1:]))
        return (grad,)

    return _result(table.value[index], (table,), backward)


def einsum(spec: str, a: ArrayLike, b: ArrayLike) -> Tensor:
    """
    Two-operand einsum in explicit form ("ij,jk->ik"). Every index of an operand must appear in
    the other operand or in the output.
    """
    a, b = as_tensor(a), as_tensor(b)
    inputs, output = spec.replace(" ", "").split("->")
    left, right = inputs.split(",")

    def backward(g):
        return (
            np.einsum(f"{output},{right}->{left}", g, b.value, optimize=True),
            np.einsum(f"{output},{left}->{right}", g, a.value, optimize=True),
        )

    return _result(np.einsum(spec, a.value, b.value, optimize=True), (a, b), backward)


def logsumexp(a: ArrayLike, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    peak = a.value.max(axis=axis, keepdims=True)
    shifted = np.exp(a.value - peak)
    total = shifted.sum(axis=axis, keepdims=True)
    value = (peak + np.log(total)).squeeze(axis)
    weights = shifted / total
    return _result(value, (a,), lambda g: (np.expand_dims(g, axis) * weights,))


# Normalization

SOFTMAX = "softmax"
RATIO = "ratio"
RATIO_EPS = 1e-12


def grouped_normalize(scores: ArrayLike, cells, valid, method: str = SOFTMAX) -> Tensor:
    """
    Normalize scores along the last axis within cells.

    ``cells`` (non-negative ints) and ``valid`` (bools) broadcast against ``scores``. Inside each
    cell the valid scores are exp-normalized (``softmax``) or divided by their sum (``ratio``);
    the result is then divided by the number of non-empty cells of the row so every row with at
    least one valid entry sums to 1. Invalid entries get weight 0.
    """
    scores = as_tensor(scores)
    shape = scores.shape
    width = shape[-1]
    rows = int(np.prod(shape[:-1], dtype=np.int64))
    s = scores.value.reshape(rows, width)
    cell = np.broadcast_to(np.asarray(cells, dtype=np.int64), shape).reshape(rows, width)
    mask = np.broadcast_to(np.asarray(valid, dtype=bool), shape).reshape(rows, width)
    n_cells = int(cell.max()) + 1 if cell.size else 1

    key = np.arange(rows)[:, None] * n_cells + cell
    flat_key = key[mask]
    occupied = np.bincount(flat_key, minlength=rows * n_cells) > 0
    cell_count = occupied.reshape(rows, n_cells).sum(axis=1).astype(np.float64)
    per_row = np.maximum(cell_count, 1.0)[:, None]

    if method == SOFTMAX:
        peak = np.full(rows * n_cells, -np.inf)
        np.maximum.at(peak, flat_key, s[mask])
        shifted = np.where(mask, np.exp(s - np.where(mask, peak[key], 0.0)), 0.0)
        denom = np.zeros(rows * n_cells)
        np.add.at(denom, flat_key, shifted[mask])
        within = np.where(mask, shifted / np.where(mask, denom[key], 1.0), 0.0)
    elif method == RATIO:
        denom = np.zeros(rows * n_cells)
        np.add.at(denom, flat_key, s[mask])
        denom = np.where(np.abs(denom) < RATIO_EPS, np.where(denom < 0, -RATIO_EPS, RATIO_EPS), denom)
        within = np.where(mask, s / denom[key], 0.0)
    else:
        raise ValueError(f"Unknown normalization '{method}'.")
    weights = within / per_row

    def backward(g):
        g = g.reshape(rows, width)
        inner = np.zeros(rows * n_cells)
        np.add.at(inner, flat_key, (g * within)[mask])
        if method == SOFTMAX:
            grad = within * (g - inner[key]) / per_row
        else:
            grad = (g - inner[key]) / (per_row * denom[key])
        return (np.where(mask, grad, 0.0).reshape(shape),)

    return _result(weights.reshape(shape), (scores,), backward)
