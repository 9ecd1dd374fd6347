import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .unified import UnifiedGraph


logger = logging.getLogger(__name__)


RngLike = Union[int, np.random.Generator, np.random.SeedSequence]


@dataclass(frozen=True)
class ChainRoute:
    """Alternating node, relation, node, ... path starting at the root."""
    elements: Tuple[int, ...]

    def __post_init__(self):
        if len(self.elements) < 3 or len(self.elements) % 2 == 0:
            raise ValueError(f"A chain route needs 2*depth+1 elements with depth >= 1, got {len(self.elements)}.")

    @property
    def depth(self) -> int:
        return len(self.elements) // 2

    @property
    def root(self) -> int:
        return self.elements[0]

    @property
    def terminal(self) -> int:
        return self.elements[-1]

    @property
    def first_hop(self) -> int:
        return self.elements[2]

    @property
    def nodes(self) -> Tuple[int, ...]:
        return self.elements[0::2]

    @property
    def relations(self) -> Tuple[int, ...]:
        return self.elements[1::2]

    def hops(self):
        for k in range(self.depth):
            yield self.elements[2 * k], self.elements[2 * k + 1], self.elements[2 * k + 2]


@dataclass(frozen=True)
class NeighborhoodSample:
    root: int
    routes: List[ChainRoute]
    layer_size: int
    max_depth: int


@dataclass(frozen=True)
class RouteBatch:
    """
    Padded routes for a batch of roots.

    Route slots are ordered by depth (n routes of depth 1, then n^2 of depth 2, ...).
    ``nodes[b, r, k]`` is the k-th node of route r (the root at k=0), ``relations[b, r, k]``
    the relation of hop k+1; positions past a route's depth hold -1.
    Rows whose root has no eligible neighbor are marked invalid and hold -1 everywhere.
    """
    roots: np.ndarray
    nodes: np.ndarray
    relations: np.ndarray
    depths: np.ndarray
    valid: np.ndarray
    layer_size: int
    max_depth: int

    @property
    def batch_size(self) -> int:
        return len(self.roots)

    @property
    def route_count(self) -> int:
        return len(self.depths)

    @property
    def first_hop(self) -> np.ndarray:
        return self.nodes[:, :, 1]

    @property
    def terminal(self) -> np.ndarray:
        return np.take_along_axis(self.nodes, self.depths[None, :, None].repeat(self.batch_size, 0), axis=2)[:, :, 0]

    def routes(self, row: int) -> List[ChainRoute]:
        if not self.valid[row]:
            return []
        routes = []
        for r, depth in enumerate(self.depths):
            elements = []
            for k in range(depth):
                elements += [int(self.nodes[row, r, k]), int(self.relations[row, r, k])]
            elements.append(int(self.nodes[row, r, depth]))
            routes.append(ChainRoute(tuple(elements)))
        return routes

    def to_sample(self, row: int) -> NeighborhoodSample:
        return NeighborhoodSample(
            root=int(self.roots[row]),
            routes=self.routes(row),
            layer_size=self.layer_size,
            max_depth=self.max_depth,
        )

    @classmethod
    def concatenate(cls, batches: Sequence["RouteBatch"]) -> "RouteBatch":
        first = batches[0]
        return cls(
            roots=np.concatenate([b.roots for b in batches]),
            nodes=np.concatenate([b.nodes for b in batches]),
            relations=np.concatenate([b.relations for b in batches]),
            depths=first.depths,
            valid=np.concatenate([b.valid for b in batches]),
            layer_size=first.layer_size,
            max_depth=first.max_depth,
        )


def route_count(depth: int, size: int) -> int:
    return sum(size ** d for d in range(1, depth + 1))


def as_generator(seed: RngLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def root_generators(roots, *key: int) -> List[np.random.Generator]:
    """One generator per root, seeded by ``key`` followed by the root id."""
    return [np.random.default_rng(np.random.SeedSequence([*key, int(root)])) for root in roots]


def _uniforms(shape, rng: Optional[np.random.Generator], per_root: Optional[Sequence[np.random.Generator]]):
    if per_root is None:
        return rng.random(shape)
    if shape[0] == 0:
        return np.empty(shape)
    return np.stack([generator.random(shape[1]) for generator in per_root])


def sample_batch(
        graph: UnifiedGraph,
        roots,
        depth: int,
        size: int,
        rng: Optional[RngLike],
        exclude: Optional[Tuple[np.ndarray, np.ndarray]] = None,
        per_root: Optional[Sequence[np.random.Generator]] = None,
) -> RouteBatch:
    """
    Grow a sampling tree of fan-out ``size`` and depth ``depth`` below every root.

    Every frontier node draws ``size`` neighbors uniformly with replacement. When
    ``exclude`` holds (user-nodes, item-nodes), the interaction edge between the
    pair of each row is never drawn, in either direction.

    With ``per_root`` (one generator per root, see ``root_generators``) each row draws
    only from its own generator, so a root's routes do not depend on the rest of the batch.
    """
    if depth < 1 or size < 1:
        raise ValueError(f"Sampling needs depth >= 1 and size >= 1, got depth={depth}, size={size}.")
    roots = np.asarray(roots, dtype=np.int64).reshape(-1)
    batch = len(roots)
    if per_root is not None:
        if len(per_root) != batch:
            raise ValueError(f"Expected one generator per root ({batch}), got {len(per_root)}.")
        rng = None
    else:
        rng = as_generator(rng)

    if exclude is not None:
        users, items = (np.asarray(a, dtype=np.int64).reshape(-1) for a in exclude)
        interact = np.full(batch, graph.interact_relation)
        user_pos = graph.edge_positions(users, interact, items)
        item_pos = graph.edge_positions(items, interact, users)
    else:
        users = items = np.full(batch, -1, dtype=np.int64)
        user_pos = item_pos = np.full(batch, -1, dtype=np.int64)

    layers = [roots[:, None]]
    relation_layers = []
    valid = np.ones(batch, dtype=bool)
    for level in range(1, depth + 1):
        frontier = np.repeat(layers[-1], size, axis=1)
        start = graph.indptr[frontier]
        degree = graph.indptr[frontier + 1] - start
        skip = np.where(
            frontier == users[:, None], user_pos[:, None],
            np.where(frontier == items[:, None], item_pos[:, None], -1),
        )
        eligible = degree - (skip >= 0)
        if level == 1:
            valid = eligible[:, 0] > 0
        draws = _uniforms(frontier.shape, rng, per_root)
        offset = np.minimum(np.floor(draws * eligible).astype(np.int64), np.maximum(eligible - 1, 0))
        position = start + offset
        position = np.where((skip >= 0) & (position >= skip), position + 1, position)
        position = np.where(eligible > 0, position, 0)
        if graph.edge_count == 0:
            neighbor = np.zeros_like(frontier)
            relation = np.zeros_like(frontier)
        else:
            neighbor = graph.adj_neighbor[position]
            relation = graph.adj_relation[position]
        # Invalid rows keep a well-formed frontier so deeper layers stay in range
        neighbor = np.where(valid[:, None], neighbor, roots[:, None])
        layers.append(neighbor)
        relation_layers.append(relation)

    total = route_count(depth, size)
    nodes = np.full((batch, total, depth + 1), -1, dtype=np.int64)
    relations = np.full((batch, total, depth), -1, dtype=np.int64)
    depths = np.empty(total, dtype=np.int64)
    slot = 0
    for level in range(1, depth + 1):
        width = size ** level
        index = np.arange(width)
        for k in range(level + 1):
            nodes[:, slot:slot + width, k] = layers[k][:, index // size ** (level - k)]
        for k in range(level):
            relations[:, slot:slot + width, k] = relation_layers[k][:, index // size ** (level - k - 1)]
        depths[slot:slot + width] = level
        slot += width

    nodes[~valid] = -1
    relations[~valid] = -1
    return RouteBatch(
        roots=roots,
        nodes=nodes,
        relations=relations,
        depths=depths,
        valid=valid,
        layer_size=size,
        max_depth=depth,
    )


def sample_neighborhood(
        graph: UnifiedGraph,
        root: int,
        depth: int,
        size: int,
        seed: RngLike,
        exclude: Optional[Tuple[int, int]] = None,
) -> NeighborhoodSample:
    graph._check_node(root)
    pair = None
    if exclude is not None:
        pair = (np.array([exclude[0]]), np.array([exclude[1]]))
    batch = sample_batch(graph, [root], depth, size, seed, exclude=pair)
    return batch.to_sample(0)
