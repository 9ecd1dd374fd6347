import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from app import settings
from app.graph import Triple
from app.ingest import IdMap, InteractionRecord, PreparedDataset, prepare_records
from app.services.state import RunDirectory
from .configurations import SyntheticSpec


logger = logging.getLogger(__name__)


@dataclass
class SyntheticData:
    interactions: List[Tuple[str, str]]
    triples: List[Tuple[str, str, str]]
    alignment: List[Tuple[str, str]]
    user_latents: np.ndarray
    cluster_latents: np.ndarray
    item_clusters: np.ndarray

    def interaction_lines(self) -> str:
        return "".join(f"{user}\t{item}\n" for user, item in self.interactions)

    def kg_lines(self) -> str:
        return "".join(f"{head}\t{relation}\t{tail}\n" for head, relation, tail in self.triples)

    def alignment_lines(self) -> str:
        return "".join(f"{item}\t{entity}\n" for item, entity in self.alignment)

    def write(self, directory: RunDirectory):
        directory.write_text(settings.SYNTH_INTERACTIONS_FILENAME, self.interaction_lines())
        directory.write_text(settings.SYNTH_KG_FILENAME, self.kg_lines())
        directory.write_text(settings.SYNTH_ALIGNMENT_FILENAME, self.alignment_lines())


def generate_synthetic(spec: SyntheticSpec) -> SyntheticData:
    """
    Plant cluster structure and route it through the KG.

    Item i is aligned to entity i and linked to ``kg_edges_per_item`` attribute entities of its
    cluster. Each user clicks the ``interactions_per_user`` items with the highest
    user . cluster latent score plus Gaussian noise; with zero noise all clicks fall in the user's
    best cluster while it has enough items, ties going to the lower item id.
    """
    rng = np.random.default_rng(spec.seed)
    user_latents = rng.normal(size=(spec.users, spec.latent_dim))
    cluster_latents = rng.normal(size=(spec.clusters, spec.latent_dim))
    item_clusters = rng.permutation(np.arange(spec.items) % spec.clusters)

    # Attribute entities follow the item entities, dealt round-robin to clusters
    attributes = np.arange(spec.items, spec.entities)
    pools = [rng.permutation(attributes[attributes % spec.clusters == c]) for c in range(spec.clusters)]
    triples, alignment = [], []
    seen_in_cluster = np.zeros(spec.clusters, dtype=np.int64)
    for item in range(spec.items):
        cluster = item_clusters[item]
        pool = pools[cluster]
        slot = seen_in_cluster[cluster]
        seen_in_cluster[cluster] += 1
        alignment.append((f"i{item}", f"e{item}"))
        for edge in range(spec.kg_edges_per_item):
            # Walking the pool round-robin covers every attribute entity of the cluster
            position = slot * spec.kg_edges_per_item + edge
            tail = pool[position % len(pool)]
            relation = position % spec.relations
            triples.append((f"e{item}", f"r{relation}", f"e{tail}"))

    scores = user_latents @ cluster_latents[item_clusters].T
    if spec.noise > 0:
        scores = scores + spec.noise * rng.normal(size=scores.shape)
    ranked = np.argsort(-scores, axis=1, kind="stable")[:, :spec.interactions_per_user]
    interactions = [(f"u{user}", f"i{item}") for user in range(spec.users) for item in ranked[user]]

    logger.info(
        f"Generated {len(interactions)} interactions, {len(triples)} triples and {len(alignment)} alignments "
        f"(seed {spec.seed})."
    )
    return SyntheticData(
        interactions=interactions,
        triples=triples,
        alignment=alignment,
        user_latents=user_latents,
        cluster_latents=cluster_latents,
        item_clusters=item_clusters,
    )


def generate_dataset(
        spec: SyntheticSpec,
        ratios: Tuple[float, float, float] = (0.6, 0.2, 0.2),
        negative_ratio: int = 1,
        eval_negative_ratio: int = 1,
        k_core: int = 1,
        seed: int = None,
) -> PreparedDataset:
    """Run the preparation pipeline on freshly generated data without touching the disk."""
    data = generate_synthetic(spec)
    entities, relations = IdMap(), IdMap()
    triples = [Triple(entities.add(h), relations.add(r), entities.add(t)) for h, r, t in data.triples]
    raw_alignment = {item: entities.add(entity) for item, entity in data.alignment}
    records = [InteractionRecord(user, item) for user, item in data.interactions]
    return prepare_records(
        records,
        triples,
        raw_alignment,
        entities,
        relations,
        k_core=k_core,
        ratios=ratios,
        negative_ratio=negative_ratio,
        eval_negative_ratio=eval_negative_ratio,
        seed=spec.seed if seed is None else seed,
        tag=f"synthetic-{spec.seed}",
    )
