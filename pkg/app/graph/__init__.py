from .unified import NodeRole, Triple, UnifiedGraph, build_unified_graph, neighbors
from .sampling import (
    ChainRoute,
    NeighborhoodSample,
    RouteBatch,
    as_generator,
    root_generators,
    route_count,
    sample_batch,
    sample_neighborhood,
)
