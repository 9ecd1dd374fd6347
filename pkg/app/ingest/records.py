from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, Iterator, List, NamedTuple, Optional, Tuple


class InteractionRecord(NamedTuple):
    user: str
    item: str
    rating: Optional[float] = None
    timestamp: Optional[int] = None


class LabeledPair(NamedTuple):
    user: Hashable
    item: Hashable
    label: int = 1


class IdMap:
    """Bijection between raw string ids and dense integer ids, in insertion order."""

    def __init__(self, raw_ids: Iterable[str] = ()):
        self._ids: Dict[str, int] = {}
        self._raw: List[str] = []
        for raw in raw_ids:
            self.add(raw)

    def add(self, raw: str) -> int:
        if raw not in self._ids:
            self._ids[raw] = len(self._raw)
            self._raw.append(raw)
        return self._ids[raw]

    def lookup(self, raw: str) -> int:
        return self._ids[raw]

    def get(self, raw: str, default=None):
        return self._ids.get(raw, default)

    def raw(self, dense_id: int) -> str:
        return self._raw[dense_id]

    def items(self) -> Iterator[Tuple[str, int]]:
        return iter(self._ids.items())

    def __len__(self):
        return len(self._raw)

    def __contains__(self, raw):
        return raw in self._ids

    def __eq__(self, other):
        return isinstance(other, IdMap) and self._raw == other._raw

    def __repr__(self):
        return f"IdMap(size={len(self)})"


@dataclass
class DatasetSplit:
    """Labeled pairs per split over dense user ids and item ids."""
    train: List[LabeledPair]
    validation: List[LabeledPair]
    test: List[LabeledPair]
    users: IdMap = field(default_factory=IdMap)
    items: IdMap = field(default_factory=IdMap)

    def parts(self) -> Dict[str, List[LabeledPair]]:
        return {"train": self.train, "validation": self.validation, "test": self.test}

    def positives(self, part: str = None) -> List[LabeledPair]:
        pairs = self.parts()[part] if part else self.train + self.validation + self.test
        return [p for p in pairs if p.label == 1]

    def positive_items_by_user(self, part: str = None) -> Dict[int, set]:
        clicked: Dict[int, set] = {}
        for pair in self.positives(part):
            clicked.setdefault(pair.user, set()).add(pair.item)
        return clicked
