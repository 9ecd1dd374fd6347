"""
Selector, evaluator and prediction layers. Inputs may be Tensors (recorded on an active tape) or
plain arrays; leading dimensions are treated as batch dimensions.
"""
from typing import Tuple

import numpy as np

from . import tape
from .options import GroupingMode, NormalizationMode
from .tape import ArrayLike, Tensor


def knowledge_selector(
        elements: ArrayLike,
        queries: ArrayLike,
        selector_weight: ArrayLike,
        selector_bias: ArrayLike,
        valid=None,
        normalization: NormalizationMode = NormalizationMode.SOFTMAX,
) -> Tuple[Tensor, Tensor]:
    """
    Attend over route elements with every query.

    keys = relu(W_k e + b_k); score = q . key; the normalized scores weight the raw element
    vectors.

    :param elements: (..., L, d) element embeddings
    :param queries: (n, d)
    :param valid: (..., L) mask of real elements, all valid when omitted
    :return: (selected features (..., n, d), attention weights (..., n, L))
    """
    elements = tape.as_tensor(elements)
    lead, (width, dim) = elements.shape[:-2], elements.shape[-2:]
    rows = int(np.prod(lead, dtype=np.int64))
    flat = tape.reshape(elements, (rows, width, dim))
    mask = np.ones((rows, width), dtype=bool) if valid is None else np.asarray(valid, dtype=bool).reshape(rows, width)

    keys = tape.relu(tape.add(tape.einsum("pld,ed->ple", flat, selector_weight), selector_bias))
    scores = tape.einsum("ple,ne->pnl", keys, queries)
    attention = tape.grouped_normalize(scores, 0, mask[:, None, :], NormalizationMode(normalization).value)
    selected = tape.einsum("pnl,pld->pnd", attention, flat)
    n = attention.shape[1]
    return (
        tape.reshape(selected, lead + (n, dim)),
        tape.reshape(attention, lead + (n, width)),
    )


def route_score(features: ArrayLike, evaluator_weight: ArrayLike, evaluator_bias: ArrayLike) -> Tensor:
    """s = w_c . e_c + b_c over the last axis."""
    features = tape.as_tensor(features)
    dim = features.shape[-1]
    rows = int(np.prod(features.shape[:-1], dtype=np.int64))
    flat = tape.reshape(features, (rows, dim))
    weight = tape.reshape(evaluator_weight, (dim,))
    scores = tape.add(tape.einsum("pd,d->p", flat, weight), evaluator_bias)
    return tape.reshape(scores, features.shape[:-1])


def group_normalize(
        scores: ArrayLike,
        cells,
        valid,
        mode: GroupingMode,
        normalization: NormalizationMode = NormalizationMode.SOFTMAX,
) -> Tensor:
    """
    Route weights along the last axis. Base mode ignores the scores and spreads weight
    uniformly over the valid routes.
    """
    scores = tape.as_tensor(scores)
    if GroupingMode(mode) == GroupingMode.BASE:
        mask = np.broadcast_to(np.asarray(valid, dtype=bool), scores.shape)
        count = mask.sum(axis=-1, keepdims=True)
        return Tensor(np.where(mask, 1.0 / np.maximum(count, 1), 0.0))
    if GroupingMode(mode) == GroupingMode.GLOBAL:
        cells = 0
    return tape.grouped_normalize(scores, cells, valid, NormalizationMode(normalization).value)


def evaluate_routes(features: ArrayLike, weights: ArrayLike) -> Tensor:
    """e_N = sum_c weight_c * e_c; (..., R, d) x (..., R) -> (..., d). No routes gives zeros."""
    features, weights = tape.as_tensor(features), tape.as_tensor(weights)
    lead, (count, dim) = features.shape[:-2], features.shape[-2:]
    if count == 0:
        return Tensor(np.zeros(lead + (dim,)))
    rows = int(np.prod(lead, dtype=np.int64))
    flat = tape.reshape(features, (rows, count, dim))
    flat_weights = tape.reshape(weights, (rows, count))
    return tape.reshape(tape.einsum("pr,prd->pd", flat_weights, flat), lead + (dim,))


def enrich(embedding: ArrayLike, neighborhood: ArrayLike) -> Tensor:
    return tape.add(embedding, neighborhood)


def predict_logit(user: ArrayLike, item: ArrayLike) -> Tensor:
    return tape.sum(tape.mul(user, item), axis=-1)


def predict(user: ArrayLike, item: ArrayLike) -> Tensor:
    """Click probability sigmoid(u . v)."""
    return tape.sigmoid(predict_logit(user, item))
