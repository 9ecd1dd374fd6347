"""Route element selection under an ablation mask, and the route partitions used by grouping."""
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from app.graph import ChainRoute, RouteBatch
from .options import AblationMask, GroupingMode


class ElementKind(str, Enum):
    ROOT = "U/V"
    RELATION = "R"
    HEAD = "H"
    TAIL = "T"


def element_kind(position: int, depth: int) -> ElementKind:
    if position == 0:
        return ElementKind.ROOT
    if position % 2 == 1:
        return ElementKind.RELATION
    if position == 2 * depth:
        return ElementKind.TAIL
    return ElementKind.HEAD


_KIND_FLAGS = {
    ElementKind.ROOT: "include_user_item",
    ElementKind.RELATION: "include_relation",
    ElementKind.HEAD: "include_head",
    ElementKind.TAIL: "include_tail",
}


def kept_positions(depth: int, mask: AblationMask) -> List[int]:
    """Positions of a depth-``depth`` route the mask keeps; the terminal survives an empty result."""
    kept = [p for p in range(2 * depth + 1) if getattr(mask, _KIND_FLAGS[element_kind(p, depth)])]
    return kept or [2 * depth]


def route_elements(route: ChainRoute, mask: AblationMask) -> List[int]:
    """
    Element ids of ``route`` kept by ``mask``, in route order. Even positions are node ids, odd
    positions relation ids.
    """
    return [route.elements[p] for p in kept_positions(route.depth, mask)]


def element_index(batch: RouteBatch, mask: AblationMask, node_count: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rows into the stacked (node, relation) embedding table for every route element.

    :return: (index, valid), both shaped (batch, routes, 2 * max_depth + 1); relation r maps to
        row ``node_count + r``; masked or padded positions are invalid and point at row 0
    """
    width = 2 * batch.max_depth + 1
    keep = np.zeros((batch.route_count, width), dtype=bool)
    for depth in np.unique(batch.depths):
        keep[np.ix_(batch.depths == depth, kept_positions(int(depth), mask))] = True

    index = np.zeros((batch.batch_size, batch.route_count, width), dtype=np.int64)
    index[:, :, 0::2] = batch.nodes
    index[:, :, 1::2] = batch.relations + node_count
    valid = keep[None, :, :] & batch.valid[:, None, None]
    return np.where(valid, index, 0), valid


def route_cells(batch: RouteBatch, mode: GroupingMode) -> np.ndarray:
    """
    Cell id per (row, route) for normalization: one cell (global), one per distinct first-hop
    node (vertical) or one per depth (horizontal). Base mode has no cells and gets zeros.
    """
    shape = (batch.batch_size, batch.route_count)
    if mode == GroupingMode.VERTICAL:
        return _dense_rank(batch.first_hop)
    if mode == GroupingMode.HORIZONTAL:
        return np.broadcast_to(batch.depths[None, :] - 1, shape).copy()
    return np.zeros(shape, dtype=np.int64)


def cells_for_routes(routes: Sequence[ChainRoute], mode: GroupingMode) -> np.ndarray:
    if not routes:
        return np.zeros(0, dtype=np.int64)
    if mode == GroupingMode.VERTICAL:
        return _dense_rank(np.array([[r.first_hop for r in routes]]))[0]
    if mode == GroupingMode.HORIZONTAL:
        return np.array([r.depth - 1 for r in routes], dtype=np.int64)
    return np.zeros(len(routes), dtype=np.int64)


def batch_from_routes(root: int, routes: Sequence[ChainRoute], layer_size: int = 0) -> RouteBatch:
    """One-row RouteBatch holding the given routes in order."""
    max_depth = max((r.depth for r in routes), default=1)
    count = len(routes)
    nodes = np.full((1, count, max_depth + 1), -1, dtype=np.int64)
    relations = np.full((1, count, max_depth), -1, dtype=np.int64)
    for slot, route in enumerate(routes):
        nodes[0, slot, :route.depth + 1] = route.nodes
        relations[0, slot, :route.depth] = route.relations
    return RouteBatch(
        roots=np.array([root], dtype=np.int64),
        nodes=nodes,
        relations=relations,
        depths=np.array([r.depth for r in routes], dtype=np.int64),
        valid=np.array([count > 0]),
        layer_size=layer_size,
        max_depth=max_depth,
    )


def _dense_rank(values: np.ndarray) -> np.ndarray:
    """Per row, replace every value by the rank of its distinct value."""
    if values.shape[1] == 0:
        return values.astype(np.int64)
    order = np.argsort(values, axis=1, kind="stable")
    ordered = np.take_along_axis(values, order, axis=1)
    fresh = np.concatenate(
        [np.ones((len(values), 1), dtype=bool), ordered[:, 1:] != ordered[:, :-1]], axis=1,
    )
    ranks = np.cumsum(fresh, axis=1) - 1
    cells = np.empty_like(ranks)
    np.put_along_axis(cells, order, ranks, axis=1)
    return cells
