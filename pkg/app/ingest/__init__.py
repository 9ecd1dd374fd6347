from .records import DatasetSplit, IdMap, InteractionRecord, LabeledPair
from .readers import load_alignment, load_interactions, load_kg
from .preprocessing import (
    FeedbackPolicy,
    FeedbackPolicyKind,
    add_negatives,
    k_core_filter,
    sample_negatives,
    split,
    to_implicit,
)
from .dataset import PreparedDataset, format_statistics, load_dataset, save_dataset
from .pipeline import prepare_dataset, prepare_records
