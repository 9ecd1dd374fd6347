import logging
from dataclasses import dataclass
from typing import Dict, Iterable

import numpy as np

from app.graph import RouteBatch
from app.model import DKSEModel, tape
from app.model.tape import ArrayLike, Tensor
from .hyper import ContrastiveLogit, HyperParams


logger = logging.getLogger(__name__)


PROBABILITY_EPS = 1e-7


def bce_loss(probabilities: ArrayLike, labels) -> Tensor:
    """Mean binary cross-entropy, probabilities clamped to [eps, 1 - eps]."""
    labels = np.asarray(labels, dtype=np.float64)
    p = tape.clip(probabilities, PROBABILITY_EPS, 1.0 - PROBABILITY_EPS)
    terms = tape.add(tape.mul(labels, tape.log(p)), tape.mul(1.0 - labels, tape.log(tape.sub(1.0, p))))
    return tape.neg(tape.mean(terms))


def contrastive_loss(users: ArrayLike, items: ArrayLike, tau: float,
                     logit: ContrastiveLogit = ContrastiveLogit.SIGMOID) -> Tensor:
    """
    In-batch softmax cross-entropy: row i scores user i against every item of the batch and the
    matching item i is the target. Mean over rows.
    """
    users, items = tape.as_tensor(users), tape.as_tensor(items)
    if users.shape[0] == 0:
        return Tensor(0.0)
    dots = tape.einsum("id,jd->ij", users, items)
    if ContrastiveLogit(logit) == ContrastiveLogit.SIGMOID:
        dots = tape.sigmoid(dots)
    logits = tape.div(dots, tau)
    diagonal = tape.sum(tape.mul(logits, np.eye(users.shape[0])), axis=1)
    return tape.mean(tape.sub(tape.logsumexp(logits, axis=1), diagonal))


def l2_penalty(tensors: Iterable[ArrayLike], l2: float) -> Tensor:
    """l2 times the sum of squares of every tensor."""
    total = Tensor(0.0)
    for tensor in tensors:
        total = tape.add(total, tape.sum(tape.mul(tensor, tensor)))
    return tape.mul(total, l2)


@dataclass
class LossTerms:
    total: Tensor
    bce: Tensor
    contrastive: Tensor
    l2: Tensor

    def values(self) -> Dict[str, float]:
        return {
            "loss": float(self.total.value),
            "bce": float(self.bce.value),
            "cl": float(self.contrastive.value),
            "l2": float(self.l2.value),
        }


def total_loss(
        model: DKSEModel,
        leaves: Dict[str, Tensor],
        user_nodes,
        item_nodes,
        labels,
        user_batch: RouteBatch,
        item_batch: RouteBatch,
        hyper: HyperParams,
) -> LossTerms:
    """Mean BCE over the labeled pairs, the in-batch contrastive term over the positives, and L2."""
    logits, users, items = model.forward(leaves, user_nodes, item_nodes, user_batch, item_batch)
    labels = np.asarray(labels, dtype=np.float64)
    bce = bce_loss(tape.sigmoid(logits), labels)

    if hyper.use_contrastive:
        positives = np.flatnonzero(labels == 1)
        contrastive = contrastive_loss(
            tape.take(users, positives), tape.take(items, positives), hyper.tau, hyper.contrastive_logit,
        )
    else:
        contrastive = Tensor(0.0)

    penalty = l2_penalty(leaves.values(), hyper.l2)
    return LossTerms(
        total=tape.add(tape.add(bce, contrastive), penalty),
        bce=bce,
        contrastive=contrastive,
        l2=penalty,
    )
