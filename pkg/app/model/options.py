from enum import Enum

from pydantic import BaseModel, root_validator


class GroupingMode(str, Enum):
    GLOBAL = "global"
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"
    BASE = "base"


class NormalizationMode(str, Enum):
    SOFTMAX = "softmax"
    RATIO = "ratio"


class AggregationTarget(str, Enum):
    # Per-route selected feature, or the embedding of the route's terminal node
    SELECTED = "selected"
    TERMINAL = "terminal"


class AblationMask(BaseModel):
    """Which route elements the selector sees."""
    include_user_item: bool = True
    include_head: bool = True
    include_relation: bool = True
    include_tail: bool = True

    class Config:
        allow_mutation = False

    @root_validator
    def at_least_one_component(cls, values):
        if not any(values.get(flag) for flag in ("include_user_item", "include_head", "include_relation", "include_tail")):
            raise ValueError("An ablation mask must keep at least one route component.")
        return values

    @classmethod
    def full(cls) -> "AblationMask":
        return cls()

    @classmethod
    def without(cls, component: str) -> "AblationMask":
        """``component`` is one of U/V, H, R, T."""
        flag = COMPONENT_FLAGS.get(component.upper())
        if flag is None:
            raise ValueError(f"Unknown route component '{component}', expected one of {sorted(COMPONENT_FLAGS)}.")
        return cls(**{flag: False})

    @property
    def label(self) -> str:
        dropped = [name for name, flag in COMPONENT_FLAGS.items() if not getattr(self, flag)]
        return "full" if not dropped else "w/o " + ",".join(dropped)

    def __hash__(self):
        return hash(tuple(self.dict().values()))


COMPONENT_FLAGS = {
    "U/V": "include_user_item",
    "H": "include_head",
    "R": "include_relation",
    "T": "include_tail",
}
