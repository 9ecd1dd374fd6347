import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from app import settings
from app.graph import NeighborhoodSample, RouteBatch, UnifiedGraph, as_generator, root_generators, sample_batch
from . import tape
from .layers import enrich, evaluate_routes, group_normalize, knowledge_selector, predict_logit, route_score
from .options import AblationMask, AggregationTarget, GroupingMode, NormalizationMode
from .parameters import ParameterSet
from .routes import batch_from_routes, element_index, route_cells
from .tape import Tensor


logger = logging.getLogger(__name__)


USER_SIDE = "user"
ITEM_SIDE = "item"

# Observer signature: (side, final route weights (batch, routes), the sampled batch)
RouteObserver = Callable[[str, np.ndarray, RouteBatch], None]


@dataclass(frozen=True)
class SideSampling:
    depth: int
    size: int


@dataclass
class DKSEModel:
    """
    Two-sided neighborhood model: every user and item embedding is enriched with an attention
    summary of the routes sampled around it, and a pair is scored by sigmoid(e_u . e_v).
    """
    params: ParameterSet
    user_sampling: SideSampling
    item_sampling: SideSampling
    grouping: GroupingMode = GroupingMode.GLOBAL
    mask: AblationMask = field(default_factory=AblationMask)
    normalization: NormalizationMode = NormalizationMode.SOFTMAX
    aggregation: AggregationTarget = AggregationTarget.SELECTED
    use_neighborhood: bool = True
    observer: Optional[RouteObserver] = None

    @classmethod
    def from_hyper(cls, params: ParameterSet, hyper, observer: Optional[RouteObserver] = None) -> "DKSEModel":
        return cls(
            params=params,
            user_sampling=SideSampling(hyper.l_u, hyper.n_u),
            item_sampling=SideSampling(hyper.l_v, hyper.n_v),
            grouping=hyper.grouping,
            mask=hyper.mask,
            normalization=hyper.normalization,
            aggregation=hyper.aggregation,
            use_neighborhood=hyper.use_neighborhood,
            observer=observer,
        )

    def sampling(self, side: str) -> SideSampling:
        return self.user_sampling if side == USER_SIDE else self.item_sampling

    def leaves(self) -> Dict[str, Tensor]:
        return self.params.leaves()

    def constants(self) -> Dict[str, Tensor]:
        return {name: Tensor(array, name=name) for name, array in self.params.items()}

    def neighborhood(self, leaves: Dict[str, Tensor], batch: RouteBatch, side: str = USER_SIDE) -> Tensor:
        """Neighborhood vectors (batch, d) of the batch roots, averaged over the query bank."""
        dim = self.params.dim
        if batch.route_count == 0 or not batch.valid.any():
            return Tensor(np.zeros((batch.batch_size, dim)))

        index, element_valid = element_index(batch, self.mask, self.params.node_count)
        table = tape.concat([leaves["node_embeddings"], leaves["relation_embeddings"]], axis=0)
        elements = tape.take(table, index)
        features, _ = knowledge_selector(
            elements,
            leaves["queries"],
            leaves["selector_weight"],
            leaves["selector_bias"],
            valid=element_valid,
            normalization=self.normalization,
        )
        # (batch, routes, n) -> (batch, n, routes) so routes are normalized along the last axis
        scores = tape.transpose(route_score(features, leaves["evaluator_weight"], leaves["evaluator_bias"]), (0, 2, 1))
        route_valid = np.broadcast_to(batch.valid[:, None], (batch.batch_size, batch.route_count))
        weights = group_normalize(
            scores,
            route_cells(batch, self.grouping)[:, None, :],
            route_valid[:, None, :],
            self.grouping,
            self.normalization,
        )
        weights = tape.mean(weights, axis=1)

        if self.aggregation == AggregationTarget.TERMINAL:
            terminal = np.where(batch.valid[:, None], batch.terminal, 0)
            aggregated = tape.take(leaves["node_embeddings"], terminal)
        else:
            aggregated = tape.mean(features, axis=2)

        if self.observer is not None:
            self.observer(side, weights.value.copy(), batch)
        return evaluate_routes(aggregated, weights)

    def enriched(self, leaves: Dict[str, Tensor], nodes, batch: RouteBatch, side: str) -> Tensor:
        base = tape.take(leaves["node_embeddings"], np.asarray(nodes, dtype=np.int64))
        if not self.use_neighborhood:
            return base
        return enrich(base, self.neighborhood(leaves, batch, side))

    def sample_pairs(self, graph: UnifiedGraph, user_nodes, item_nodes, rng) -> Tuple[RouteBatch, RouteBatch]:
        """Fresh neighborhoods for both sides of every pair; the pair's own interaction is never sampled."""
        rng = as_generator(rng)
        exclude = (np.asarray(user_nodes), np.asarray(item_nodes))
        users = sample_batch(graph, user_nodes, self.user_sampling.depth, self.user_sampling.size, rng, exclude=exclude)
        items = sample_batch(graph, item_nodes, self.item_sampling.depth, self.item_sampling.size, rng, exclude=exclude)
        return users, items

    def forward(self, leaves: Dict[str, Tensor], user_nodes, item_nodes,
                user_batch: RouteBatch, item_batch: RouteBatch) -> Tuple[Tensor, Tensor, Tensor]:
        """:return: (logits, enriched users, enriched items)"""
        users = self.enriched(leaves, user_nodes, user_batch, USER_SIDE)
        items = self.enriched(leaves, item_nodes, item_batch, ITEM_SIDE)
        return predict_logit(users, items), users, items

    def msal(self, sample: NeighborhoodSample) -> np.ndarray:
        """Neighborhood vector of one sampled node."""
        if not sample.routes:
            return np.zeros(self.params.dim)
        batch = batch_from_routes(sample.root, sample.routes, sample.layer_size)
        return self.neighborhood(self.constants(), batch).value[0]

    def enriched_embeddings(self, graph: UnifiedGraph, nodes, side: str, seed: int,
                            batch_size: Optional[int] = None) -> np.ndarray:
        """
        Evaluation-time enriched embeddings for ``nodes``. Every node samples from its own
        generator keyed by (seed, side, node), so its routes do not depend on the other nodes
        requested or on the batch size.
        """
        nodes = np.asarray(nodes, dtype=np.int64)
        if not self.use_neighborhood:
            return self.params.node_embeddings[nodes].copy()
        batch_size = batch_size or settings.DKSE_EVAL_BATCH_SIZE
        sampling = self.sampling(side)
        constants = self.constants()
        chunks = []
        for start in range(0, len(nodes), batch_size):
            chunk = nodes[start:start + batch_size]
            per_root = root_generators(chunk, seed, SIDE_CODES[side])
            batch = sample_batch(graph, chunk, sampling.depth, sampling.size, None, per_root=per_root)
            chunks.append(self.enriched(constants, chunk, batch, side).value)
        if not chunks:
            return np.zeros((0, self.params.dim))
        return np.concatenate(chunks, axis=0)


SIDE_CODES = {USER_SIDE: 0, ITEM_SIDE: 1}
