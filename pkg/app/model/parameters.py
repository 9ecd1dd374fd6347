import logging
from dataclasses import dataclass, fields
from typing import Dict, Iterator, List, Tuple

import numpy as np

from app.services.errors import NonFiniteValueError
from .tape import Tensor


logger = logging.getLogger(__name__)


@dataclass
class ParameterSet:
    """
    All trainable tensors of the model, float64.

    node_embeddings      (node_count, d)  users, items and entities in the merged id space
    relation_embeddings  (relation_count, d)  KG relations plus the interact relation
    queries              (n, d)
    selector_weight      (d, d), selector_bias (d,)
    evaluator_weight     (1, d), evaluator_bias (1,)
    """
    node_embeddings: np.ndarray
    relation_embeddings: np.ndarray
    queries: np.ndarray
    selector_weight: np.ndarray
    selector_bias: np.ndarray
    evaluator_weight: np.ndarray
    evaluator_bias: np.ndarray

    def __post_init__(self):
        d = self.node_embeddings.shape[1]
        if d < 1 or len(self.queries) < 1:
            raise ValueError(f"Need d >= 1 and at least one query, got d={d}, n={len(self.queries)}.")
        expected = {
            "relation_embeddings": (self.relation_embeddings.shape[0], d),
            "queries": (self.queries.shape[0], d),
            "selector_weight": (d, d),
            "selector_bias": (d,),
            "evaluator_weight": (1, d),
            "evaluator_bias": (1,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"Parameter '{name}' has shape {getattr(self, name).shape}, expected {shape}.")

    @classmethod
    def names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def initialize(cls, node_count: int, relation_count: int, dim: int, n_queries: int, seed) -> "ParameterSet":
        """Uniform in [-1/sqrt(d), 1/sqrt(d)] for embeddings, queries and weights; biases start at 0."""
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(dim)

        def uniform(*shape):
            return rng.uniform(-bound, bound, size=shape)

        return cls(
            node_embeddings=uniform(node_count, dim),
            relation_embeddings=uniform(relation_count, dim),
            queries=uniform(n_queries, dim),
            selector_weight=uniform(dim, dim),
            selector_bias=np.zeros(dim),
            evaluator_weight=uniform(1, dim),
            evaluator_bias=np.zeros(1),
        )

    @property
    def dim(self) -> int:
        return self.node_embeddings.shape[1]

    @property
    def n_queries(self) -> int:
        return self.queries.shape[0]

    @property
    def node_count(self) -> int:
        return self.node_embeddings.shape[0]

    @property
    def relation_count(self) -> int:
        return self.relation_embeddings.shape[0]

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.names()}

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        return iter(self.arrays().items())

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: array.shape for name, array in self.items()}

    def leaves(self) -> Dict[str, Tensor]:
        """Differentiable views of every tensor, for one forward pass on a tape."""
        return {name: Tensor(array, requires_grad=True, name=name) for name, array in self.items()}

    def copy(self) -> "ParameterSet":
        return ParameterSet(**{name: array.copy() for name, array in self.items()})

    def scaled(self, factor: float) -> "ParameterSet":
        return ParameterSet(**{name: array * factor for name, array in self.items()})

    def check_finite(self):
        for name, array in self.items():
            if not np.all(np.isfinite(array)):
                bad = int(np.count_nonzero(~np.isfinite(array)))
                raise NonFiniteValueError(f"Parameter '{name}' holds {bad} non-finite entries.")

    def equals(self, other: "ParameterSet") -> bool:
        """Bit-level equality."""
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for (_, a), (_, b) in zip(self.items(), other.items())
        )
