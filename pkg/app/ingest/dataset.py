import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

from app import settings
from app.graph import Triple, UnifiedGraph, build_unified_graph
from app.services.errors import MalformedInputError
from app.services.state import RunDirectory
from .records import DatasetSplit, IdMap, LabeledPair


logger = logging.getLogger(__name__)


PARTS = ("train", "validation", "test")


@dataclass
class PreparedDataset:
    """A split plus the knowledge graph side, all in dense ids."""
    split: DatasetSplit
    triples: List[Triple] = field(default_factory=list)
    # item id -> entity id
    alignment: Dict[int, int] = field(default_factory=dict)
    entities: IdMap = field(default_factory=IdMap)
    relations: IdMap = field(default_factory=IdMap)
    tag: str = ""

    @property
    def n_users(self) -> int:
        return len(self.split.users)

    @property
    def n_items(self) -> int:
        return len(self.split.items)

    def build_graph(self) -> UnifiedGraph:
        # Only training positives become interaction edges
        return build_unified_graph(
            interactions=[(p.user, p.item) for p in self.split.positives("train")],
            triples=self.triples,
            alignment=self.alignment,
            n_users=self.n_users,
            n_items=self.n_items,
            n_entities=len(self.entities),
            n_relations=len(self.relations),
        )

    def statistics(self) -> Dict[str, float]:
        interactions = len(self.split.positives())
        return {
            "users": self.n_users,
            "items": self.n_items,
            "interactions": interactions,
            "avg_user_clicks": round(interactions / self.n_users, 2) if self.n_users else 0.0,
            "entities": len(self.entities),
            "relations": len(self.relations),
            "triples": len(self.triples),
        }


def format_statistics(stats: Dict[str, float]) -> str:
    return "".join(f"{key}={value}\n" for key, value in stats.items())


def save_dataset(dataset: PreparedDataset, directory):
    """Write the split cache, the id-map sidecar and the KG cache."""
    header = settings.SPLIT_FORMAT_TAG + "\n"
    rows = [header, f"#tag\t{dataset.tag}\n"]
    for part, pairs in dataset.split.parts().items():
        rows.extend(f"{part}\t{p.user}\t{p.item}\t{p.label}\n" for p in pairs)

    maps = [header]
    for kind, id_map in (
            ("user", dataset.split.users), ("item", dataset.split.items),
            ("entity", dataset.entities), ("relation", dataset.relations)):
        maps.extend(f"{kind}\t{dense}\t{raw}\n" for raw, dense in id_map.items())

    kg = [header]
    kg.extend(f"triple\t{t.head}\t{t.relation}\t{t.tail}\n" for t in dataset.triples)
    kg.extend(f"align\t{item}\t{entity}\n" for item, entity in sorted(dataset.alignment.items()))

    target = directory if isinstance(directory, RunDirectory) else RunDirectory(directory)
    target.write_text(settings.SPLIT_FILENAME, "".join(rows))
    target.write_text(settings.IDMAP_FILENAME, "".join(maps))
    target.write_text(settings.KG_CACHE_FILENAME, "".join(kg))
    target.write_text(settings.STATS_FILENAME, format_statistics(dataset.statistics()))


def load_dataset(directory) -> PreparedDataset:
    directory = Path(directory)
    parts = {part: [] for part in PARTS}
    tag = ""
    for number, columns in _tagged_rows(directory / settings.SPLIT_FILENAME):
        if columns[0] == "#tag":
            tag = columns[1] if len(columns) > 1 else ""
            continue
        if len(columns) != 4 or columns[0] not in parts:
            raise MalformedInputError(directory / settings.SPLIT_FILENAME, number, "expected 'part<TAB>user<TAB>item<TAB>label'")
        parts[columns[0]].append(LabeledPair(int(columns[1]), int(columns[2]), int(columns[3])))

    maps = {kind: {} for kind in ("user", "item", "entity", "relation")}
    for number, columns in _tagged_rows(directory / settings.IDMAP_FILENAME):
        if len(columns) != 3 or columns[0] not in maps:
            raise MalformedInputError(directory / settings.IDMAP_FILENAME, number, "expected 'kind<TAB>id<TAB>raw'")
        maps[columns[0]][int(columns[1])] = columns[2]
    id_maps = {kind: IdMap(rows[i] for i in range(len(rows))) for kind, rows in maps.items()}

    triples, alignment = [], {}
    for number, columns in _tagged_rows(directory / settings.KG_CACHE_FILENAME):
        if columns[0] == "triple" and len(columns) == 4:
            triples.append(Triple(int(columns[1]), int(columns[2]), int(columns[3])))
        elif columns[0] == "align" and len(columns) == 3:
            alignment[int(columns[1])] = int(columns[2])
        else:
            raise MalformedInputError(directory / settings.KG_CACHE_FILENAME, number, "unknown KG cache row")

    split = DatasetSplit(
        train=parts["train"],
        validation=parts["validation"],
        test=parts["test"],
        users=id_maps["user"],
        items=id_maps["item"],
    )
    logger.info(f"Loaded prepared dataset '{tag}' from {directory}: {len(split.train)} train pairs.")
    return PreparedDataset(
        split=split,
        triples=triples,
        alignment=alignment,
        entities=id_maps["entity"],
        relations=id_maps["relation"],
        tag=tag,
    )


def _tagged_rows(path):
    """Rows of a cache file after checking its leading format line."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise MalformedInputError(path, 0, f"cannot be read: {e}") from e
    if not lines or lines[0] != settings.SPLIT_FORMAT_TAG:
        raise MalformedInputError(path, 1, f"missing '{settings.SPLIT_FORMAT_TAG}' header")
    for number, line in enumerate(lines[1:], start=2):
        if line:
            yield number, line.split("\t")
