import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.graph import Triple
from .dataset import PreparedDataset
from .preprocessing import FeedbackPolicy, add_negatives, k_core_filter, split, to_implicit
from .readers import load_alignment, load_interactions, load_kg
from .records import IdMap, InteractionRecord


logger = logging.getLogger(__name__)


def prepare_dataset(
        interactions_path,
        kg_path=None,
        alignment_path=None,
        policy: FeedbackPolicy = FeedbackPolicy.all_positive(),
        k_core: int = 20,
        ratios: Tuple[float, float, float] = (0.6, 0.2, 0.2),
        negative_ratio: int = 1,
        eval_negative_ratio: int = 1,
        seed: int = 0,
        tag: Optional[str] = None,
) -> PreparedDataset:
    """load -> implicit feedback -> k-core -> split -> negatives, plus the KG side."""
    entities, relations = IdMap(), IdMap()
    triples = load_kg(kg_path, entities, relations) if kg_path else []
    raw_alignment = load_alignment(alignment_path, entities) if alignment_path else {}
    return prepare_records(
        load_interactions(interactions_path),
        triples,
        raw_alignment,
        entities,
        relations,
        policy=policy,
        k_core=k_core,
        ratios=ratios,
        negative_ratio=negative_ratio,
        eval_negative_ratio=eval_negative_ratio,
        seed=seed,
        tag=tag or str(interactions_path),
    )


def prepare_records(
        records: Sequence[InteractionRecord],
        triples: List[Triple],
        raw_alignment: Dict[str, int],
        entities: IdMap,
        relations: IdMap,
        policy: FeedbackPolicy = FeedbackPolicy.all_positive(),
        k_core: int = 20,
        ratios: Tuple[float, float, float] = (0.6, 0.2, 0.2),
        negative_ratio: int = 1,
        eval_negative_ratio: int = 1,
        seed: int = 0,
        tag: str = "",
) -> PreparedDataset:
    """The same pipeline over records and KG data already parsed into shared id maps."""
    split_seed, negative_seed = np.random.SeedSequence(seed).spawn(2)

    positives = to_implicit(records, policy)
    logger.info(f"{len(positives)} positives out of {len(records)} records under policy {policy.kind.value}.")
    positives = k_core_filter(positives, k_core)
    data = split(positives, ratios, split_seed)

    # Items peeled away by the k-core filter lose their alignment
    alignment = {
        data.items.lookup(item): entity
        for item, entity in raw_alignment.items()
        if item in data.items
    }

    data = add_negatives(data, negative_ratio, eval_negative_ratio, negative_seed)
    return PreparedDataset(
        split=data,
        triples=list(triples),
        alignment=alignment,
        entities=entities,
        relations=relations,
        tag=tag,
    )
