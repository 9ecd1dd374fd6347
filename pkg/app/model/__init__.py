from .tape import GradientTape, Tensor
from .options import AblationMask, AggregationTarget, GroupingMode, NormalizationMode
from .parameters import ParameterSet
from .checkpoint import check_compatible, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from .routes import (
    ElementKind,
    batch_from_routes,
    cells_for_routes,
    element_index,
    element_kind,
    kept_positions,
    route_cells,
    route_elements,
)
from .layers import enrich, evaluate_routes, group_normalize, knowledge_selector, predict, predict_logit, route_score
from .dkse import ITEM_SIDE, USER_SIDE, DKSEModel, SideSampling
