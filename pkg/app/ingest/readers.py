import logging
import math
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

from app.graph import Triple
from app.services.errors import MalformedInputError
from .records import IdMap, InteractionRecord


logger = logging.getLogger(__name__)


def _rows(path) -> Iterator[Tuple[int, List[str]]]:
    """Yield (line number, tab-separated columns) for every non-blank line."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                line = line.rstrip("\r\n")
                if not line.strip():
                    continue
                yield line_number, line.split("\t")
    except (OSError, UnicodeDecodeError) as e:
        raise MalformedInputError(path, 0, f"cannot be read: {e}") from e


def load_interactions(path) -> List[InteractionRecord]:
    """
    Parse a ratings file: user, item, optional rating, optional timestamp.
    """
    records = []
    for line_number, columns in _rows(path):
        if not 2 <= len(columns) <= 4 or not columns[0] or not columns[1]:
            raise MalformedInputError(path, line_number, "expected 'user<TAB>item[<TAB>rating[<TAB>timestamp]]'")
        rating: Optional[float] = None
        timestamp: Optional[int] = None
        if len(columns) > 2 and columns[2] != "":
            try:
                rating = float(columns[2])
            except ValueError:
                raise MalformedInputError(path, line_number, f"rating '{columns[2]}' is not a number")
            if not math.isfinite(rating):
                raise MalformedInputError(path, line_number, f"rating '{columns[2]}' is not finite")
        if len(columns) > 3 and columns[3] != "":
            try:
                timestamp = int(columns[3])
            except ValueError:
                raise MalformedInputError(path, line_number, f"timestamp '{columns[3]}' is not an integer")
        records.append(InteractionRecord(columns[0], columns[1], rating, timestamp))
    logger.info(f"Loaded {len(records)} interaction records from {path}.")
    return records


def load_kg(path, entities: IdMap = None, relations: IdMap = None) -> List[Triple]:
    """
    Parse 'head<TAB>relation<TAB>tail' lines. Entity and relation strings are remapped through
    the given (shared, growing) id maps; repeated triples are kept once.
    """
    entities = entities if entities is not None else IdMap()
    relations = relations if relations is not None else IdMap()
    seen = set()
    triples = []
    for line_number, columns in _rows(path):
        if len(columns) != 3 or not all(columns):
            raise MalformedInputError(path, line_number, "expected 'head<TAB>relation<TAB>tail'")
        triple = Triple(entities.add(columns[0]), relations.add(columns[1]), entities.add(columns[2]))
        if triple not in seen:
            seen.add(triple)
            triples.append(triple)
    logger.info(f"Loaded {len(triples)} triples over {len(entities)} entities and {len(relations)} relations from {path}.")
    return triples


def load_alignment(path, entities: IdMap) -> Dict[str, int]:
    """
    Parse 'item<TAB>entity' lines into raw item id -> entity id. An entity string not seen
    in the KG gets a new entity id.
    """
    alignment: Dict[str, int] = {}
    for line_number, columns in _rows(path):
        if len(columns) != 2 or not all(columns):
            raise MalformedInputError(path, line_number, "expected 'item<TAB>entity'")
        item, entity = columns[0], entities.add(columns[1])
        if alignment.get(item, entity) != entity:
            raise MalformedInputError(path, line_number, f"item '{item}' is aligned to two different entities")
        alignment[item] = entity
    logger.info(f"Loaded {len(alignment)} item-entity alignments from {path}.")
    return alignment
