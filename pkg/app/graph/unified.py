import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from app.services.errors import GraphConstructionError, NodeOutOfRange


logger = logging.getLogger(__name__)


class NodeRole(str, Enum):
    USER = "user"
    ITEM = "item"
    ENTITY = "entity"


ROLE_CODES = {NodeRole.USER: 0, NodeRole.ITEM: 1, NodeRole.ENTITY: 2}


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


@dataclass(frozen=True)
class UnifiedGraph:
    """
    Users, items and knowledge-graph entities in one node id space.

    Node ids are laid out as users ``[0, n_users)``, items
    ``[n_users, n_users + n_items)`` and then the entities that are not
    aligned to an item. An item aligned to an entity is one node. Adjacency
    is stored as CSR arrays sorted by (node, relation, neighbor); every edge
    is stored in both directions.
    """
    n_users: int
    n_items: int
    n_entities: int
    n_kg_relations: int
    indptr: np.ndarray
    adj_relation: np.ndarray
    adj_neighbor: np.ndarray
    roles: np.ndarray
    entity_nodes: np.ndarray
    edge_keys: np.ndarray = field(repr=False)

    @property
    def node_count(self) -> int:
        return len(self.roles)

    @property
    def interact_relation(self) -> int:
        # Allocated one past the last KG relation
        return self.n_kg_relations

    @property
    def relation_count(self) -> int:
        return self.n_kg_relations + 1

    @property
    def edge_count(self) -> int:
        return len(self.adj_neighbor)

    def user_node(self, user) -> int:
        return user

    def item_node(self, item):
        return self.n_users + item

    def entity_node(self, entity):
        return self.entity_nodes[entity]

    def role(self, node: int) -> NodeRole:
        self._check_node(node)
        return list(ROLE_CODES)[int(self.roles[node])]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, node: int) -> List[Tuple[int, int]]:
        self._check_node(node)
        start, end = self.indptr[node], self.indptr[node + 1]
        return [
            (int(r), int(t))
            for r, t in zip(self.adj_relation[start:end], self.adj_neighbor[start:end])
        ]

    def has_edge(self, head: int, relation: int, tail: int) -> bool:
        return bool(self.edge_positions(np.array([head]), np.array([relation]), np.array([tail]))[0] >= 0)

    def edge_positions(self, heads, relations, tails) -> np.ndarray:
        """Global CSR positions of the given directed edges, -1 where absent."""
        heads = np.asarray(heads, dtype=np.int64)
        keys = self._keys(heads, np.asarray(relations, dtype=np.int64), np.asarray(tails, dtype=np.int64))
        positions = np.searchsorted(self.edge_keys, keys)
        clipped = np.minimum(positions, max(len(self.edge_keys) - 1, 0))
        found = (positions < len(self.edge_keys)) & (heads >= 0)
        if len(self.edge_keys):
            found &= self.edge_keys[clipped] == keys
        return np.where(found, positions, -1)

    def _keys(self, heads, relations, tails):
        n = self.node_count
        return (heads * self.relation_count + relations) * n + tails

    def _check_node(self, node):
        if not 0 <= node < self.node_count:
            raise NodeOutOfRange(f"Node {node} is outside the graph (node count {self.node_count}).")


def build_unified_graph(
        interactions: Iterable[Tuple[int, int]],
        triples: Iterable[Triple],
        alignment: Dict[int, int],
        n_users: Optional[int] = None,
        n_items: Optional[int] = None,
        n_entities: Optional[int] = None,
        n_relations: Optional[int] = None,
) -> UnifiedGraph:
    """
    Merge the user-item bipartite graph and the knowledge graph.
    :param interactions: positive (user-id, item-id) pairs; only training positives belong here
    :param triples: KG edges over entity ids
    :param alignment: item-id -> entity-id
    :param n_users, n_items, n_entities, n_relations: explicit id-space sizes, inferred when omitted
    :return: the UnifiedGraph
    """
    pairs = np.asarray(list(interactions), dtype=np.int64).reshape(-1, 2)
    kg = np.asarray([tuple(t) for t in triples], dtype=np.int64).reshape(-1, 3)
    aligned = np.asarray(sorted(alignment.items()), dtype=np.int64).reshape(-1, 2)

    n_users = _size(n_users, pairs[:, 0])
    n_items = _size(n_items, np.concatenate([pairs[:, 1], aligned[:, 0]]))
    n_entities = _size(n_entities, np.concatenate([kg[:, 0], kg[:, 2], aligned[:, 1]]))
    n_relations = _size(n_relations, kg[:, 1])

    _validate(pairs, kg, aligned, n_users, n_items, n_entities, n_relations)

    entity_nodes = np.full(n_entities, -1, dtype=np.int64)
    entity_nodes[aligned[:, 1]] = n_users + aligned[:, 0]
    free = entity_nodes < 0
    entity_nodes[free] = n_users + n_items + np.arange(int(free.sum()))
    node_count = n_users + n_items + int(free.sum())

    interact = n_relations
    heads = np.concatenate([pairs[:, 0], n_users + pairs[:, 1], entity_nodes[kg[:, 0]], entity_nodes[kg[:, 2]]])
    tails = np.concatenate([n_users + pairs[:, 1], pairs[:, 0], entity_nodes[kg[:, 2]], entity_nodes[kg[:, 0]]])
    relations = np.concatenate([
        np.full(2 * len(pairs), interact, dtype=np.int64), kg[:, 1], kg[:, 1]
    ])

    # np.unique over rows sorts by (head, relation, tail) and drops duplicates
    edges = np.unique(np.stack([heads, relations, tails], axis=1), axis=0).reshape(-1, 3)
    indptr = np.zeros(node_count + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(np.bincount(edges[:, 0], minlength=node_count))

    roles = np.full(node_count, ROLE_CODES[NodeRole.ENTITY], dtype=np.int8)
    roles[:n_users] = ROLE_CODES[NodeRole.USER]
    roles[n_users:n_users + n_items] = ROLE_CODES[NodeRole.ITEM]

    relation_count = n_relations + 1
    edge_keys = (edges[:, 0] * relation_count + edges[:, 1]) * node_count + edges[:, 2]

    graph = UnifiedGraph(
        n_users=n_users,
        n_items=n_items,
        n_entities=n_entities,
        n_kg_relations=n_relations,
        indptr=indptr,
        adj_relation=edges[:, 1].copy(),
        adj_neighbor=edges[:, 2].copy(),
        roles=roles,
        entity_nodes=entity_nodes,
        edge_keys=edge_keys,
    )
    logger.debug(
        f"Built unified graph: {node_count} nodes, {graph.edge_count} directed edges, "
        f"{relation_count} relations (interact={interact})."
    )
    return graph


def neighbors(graph: UnifiedGraph, node: int) -> List[Tuple[int, int]]:
    return graph.neighbors(node)


def _size(explicit, ids):
    if explicit is not None:
        return int(explicit)
    return int(ids.max()) + 1 if len(ids) else 0


def _validate(pairs, kg, aligned, n_users, n_items, n_entities, n_relations):
    if len(pairs) and (pairs.min() < 0 or pairs[:, 0].max() >= n_users or pairs[:, 1].max() >= n_items):
        raise GraphConstructionError("Interaction ids fall outside the user/item id space.")
    if len(kg):
        if kg[:, [0, 2]].min() < 0 or kg[:, [0, 2]].max() >= n_entities:
            raise GraphConstructionError("Triple entity ids fall outside the entity id space.")
        if kg[:, 1].min() < 0 or kg[:, 1].max() >= n_relations:
            raise GraphConstructionError(
                f"Triple relation ids must be below the relation count {n_relations}."
            )
    for item, entity in aligned:
        if not 0 <= item < n_items:
            raise GraphConstructionError(f"Alignment names item {item}, which is not a known item.")
        if not 0 <= entity < n_entities:
            raise GraphConstructionError(
                f"Item {item} is aligned to entity {entity}, which does not exist "
                f"(entity count {n_entities})."
            )
    if len(aligned):
        targets, counts = np.unique(aligned[:, 1], return_counts=True)
        if (counts > 1).any():
            entity = int(targets[counts > 1][0])
            items = aligned[aligned[:, 1] == entity, 0].tolist()
            raise GraphConstructionError(f"Items {items} are all aligned to entity {entity}.")
