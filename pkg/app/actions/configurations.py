import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, root_validator, validator

from app import settings
from app.ingest import FeedbackPolicy, FeedbackPolicyKind
from app.model import AblationMask
from app.services.core import ActionTypeEnum
from app.services.errors import ConfigurationNotFound, ConfigurationValidationError
from app.services.utils import parse_float_list, parse_int_list
from app.train import HyperParams
from .core import DataActionConfiguration, TrainingActionConfiguration


logger = logging.getLogger(__name__)


HYPER_FIELDS = list(HyperParams.__fields__)
# Preset rows use the published column names
PRESET_KEYS = {"d": "dim"}
SYNTH_PREFIX = "synth_"


class SyntheticSpec(BaseModel):
    """
    Planted-cluster dataset: items belong to latent clusters, share KG attribute entities with
    their cluster, and users click the items of the clusters they score highest.
    """
    users: int = Field(200, ge=1)
    items: int = Field(300, ge=1)
    entities: int = Field(500, ge=1)
    relations: int = Field(5, ge=1)
    latent_dim: int = Field(8, ge=1)
    interactions_per_user: int = Field(20, ge=1)
    kg_edges_per_item: int = Field(3, ge=1)
    clusters: int = Field(10, ge=1)
    noise: float = Field(0.5, ge=0.0)
    seed: int = 0

    @root_validator(skip_on_failure=True)
    def counts_fit_together(cls, values):
        items, clusters = values["items"], values["clusters"]
        if values["interactions_per_user"] > items:
            raise ValueError(f"interactions_per_user ({values['interactions_per_user']}) exceeds items ({items}).")
        if clusters > items:
            raise ValueError(f"clusters ({clusters}) exceeds items ({items}).")
        attributes = values["entities"] - items
        if attributes < clusters * values["kg_edges_per_item"]:
            raise ValueError(
                f"Need at least items + clusters * kg_edges_per_item = "
                f"{items + clusters * values['kg_edges_per_item']} entities, got {values['entities']}."
            )
        return values


class RunConfig(TrainingActionConfiguration):
    preset: Optional[str] = None
    out: Path = Path(settings.DKSE_OUTPUT_DIR)
    # A prepared split directory, or raw files, or a synthetic spec
    dataset: Optional[Path] = None
    interactions: Optional[Path] = None
    kg: Optional[Path] = None
    alignment: Optional[Path] = None
    synthetic: Optional[SyntheticSpec] = None
    policy: FeedbackPolicyKind = FeedbackPolicyKind.ALL_POSITIVE
    threshold: float = 4.0
    exact_threshold_positive: bool = True
    k_core: Optional[int] = Field(None, ge=1)
    ratios: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    negative_ratio: int = Field(1, ge=1)
    eval_negative_ratio: int = Field(1, ge=1)
    k_grid: List[int] = Field(default_factory=lambda: list(settings.DKSE_K_GRID))
    hyper: HyperParams = Field(default_factory=HyperParams)

    @validator("preset")
    def known_preset(cls, value):
        if value is not None and value not in settings.PRESETS:
            raise ValueError(f"Unknown preset '{value}', expected one of {sorted(settings.PRESETS)}.")
        return value

    @validator("dataset", "interactions", "kg", "alignment")
    def path_exists(cls, value):
        if value is not None and not Path(value).exists():
            raise ValueError(f"'{value}' does not exist.")
        return value

    @validator("ratios", pre=True)
    def ratios_from_text(cls, value):
        return tuple(parse_float_list(value)) if isinstance(value, str) else value

    @validator("k_grid", pre=True)
    def k_grid_from_text(cls, value):
        return parse_int_list(value) if isinstance(value, str) else value

    @validator("k_grid")
    def positive_k(cls, value):
        if not value or min(value) < 1:
            raise ValueError(f"The K grid needs positive values, got {value}.")
        return sorted(set(value))

    @property
    def seed(self) -> int:
        return self.hyper.seed

    @property
    def effective_k_core(self) -> int:
        # Synthetic data is generated at its final size
        if self.k_core is not None:
            return self.k_core
        return 1 if self.synthetic is not None else 20

    def has_source(self) -> bool:
        return any(v is not None for v in (self.dataset, self.interactions, self.synthetic))

    def feedback_policy(self) -> FeedbackPolicy:
        if self.policy == FeedbackPolicyKind.THRESHOLD:
            return FeedbackPolicy.threshold_at(self.threshold, self.exact_threshold_positive)
        return FeedbackPolicy.all_positive()

    @classmethod
    def from_flat(cls, values: Dict[str, Any]) -> "RunConfig":
        """Build from flat key=value pairs: hyper-parameter keys and synth_* keys are nested."""
        top, hyper, synthetic = {}, {}, {}
        for key, value in values.items():
            if key in HYPER_FIELDS:
                hyper[key] = value
            elif key.startswith(SYNTH_PREFIX):
                synthetic[key[len(SYNTH_PREFIX):]] = value
            else:
                top[key] = value
        if hyper:
            top["hyper"] = hyper
        if synthetic:
            top["synthetic"] = synthetic
        return cls.parse_obj(top)

    def to_flat(self) -> Dict[str, str]:
        flat = {}
        for key, value in self.dict(exclude={"hyper", "synthetic", "action_type"}).items():
            if value is not None:
                flat[key] = flat_value(value)
        flat.update(flat_hyper(self.hyper))
        if self.synthetic is not None:
            for key, value in self.synthetic.dict().items():
                flat[SYNTH_PREFIX + key] = flat_value(value)
        return flat


def _require_source(cls, values):
    if not any(values.get(key) is not None for key in ("dataset", "interactions", "synthetic")):
        raise ValueError("No input: give 'dataset', 'interactions' or a synthetic spec (synth_* keys).")
    return values


class PrepareConfig(RunConfig):
    action_type: ActionTypeEnum = ActionTypeEnum.DATA

    @root_validator(skip_on_failure=True)
    def raw_source(cls, values):
        if values.get("interactions") is None and values.get("synthetic") is None:
            raise ValueError("prepare needs 'interactions' or a synthetic spec (synth_* keys).")
        return values


class TrainConfig(RunConfig):
    _source = root_validator(skip_on_failure=True, allow_reuse=True)(_require_source)


class EvaluateConfig(RunConfig):
    # Defaults to the checkpoint inside the output directory
    checkpoint: Optional[Path] = None

    _source = root_validator(skip_on_failure=True, allow_reuse=True)(_require_source)

    @property
    def checkpoint_path(self) -> Path:
        return self.checkpoint or self.out / settings.CHECKPOINT_FILENAME


class AblateConfig(RunConfig):
    action_type: ActionTypeEnum = ActionTypeEnum.EXPERIMENT
    repeats: int = Field(1, ge=1)

    _source = root_validator(skip_on_failure=True, allow_reuse=True)(_require_source)


class SweepAxis(str, Enum):
    DEPTH = "depth"
    FANOUT = "fanout"
    QUERIES = "queries"
    L2 = "l2"
    DIM = "dim"


class SweepSide(str, Enum):
    USER = "user"
    ITEM = "item"
    BOTH = "both"


class SweepConfig(RunConfig):
    action_type: ActionTypeEnum = ActionTypeEnum.EXPERIMENT
    axis: SweepAxis = SweepAxis.QUERIES
    # Which side's sampling the depth and fanout axes vary
    side: SweepSide = SweepSide.BOTH
    repeats: int = Field(1, ge=1)

    _source = root_validator(skip_on_failure=True, allow_reuse=True)(_require_source)


class BenchConfig(RunConfig):
    action_type: ActionTypeEnum = ActionTypeEnum.EXPERIMENT
    steps: int = Field(3, ge=1)
    # Linear-fit tolerance on per-step time
    tolerance: float = Field(1.5, ge=1.0)

    _source = root_validator(skip_on_failure=True, allow_reuse=True)(_require_source)


class SynthConfig(DataActionConfiguration):
    out: Path = Path(settings.DKSE_OUTPUT_DIR)
    synthetic: SyntheticSpec = Field(default_factory=SyntheticSpec)

    @classmethod
    def from_flat(cls, values: Dict[str, Any]) -> "SynthConfig":
        values = dict(values)
        top, synthetic = {}, {}
        # --seed seeds the generator
        if "seed" in values:
            synthetic["seed"] = values.pop("seed")
        for key, value in values.items():
            if key.startswith(SYNTH_PREFIX):
                synthetic[key[len(SYNTH_PREFIX):]] = value
            else:
                top[key] = value
        return cls.parse_obj({**top, "synthetic": synthetic})

    def to_flat(self) -> Dict[str, str]:
        flat = {"out": str(self.out)}
        flat.update({SYNTH_PREFIX + key: flat_value(value) for key, value in self.synthetic.dict().items()})
        return flat


def flat_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, AblationMask):
        return value.label
    if isinstance(value, dict) and set(value) == set(AblationMask.__fields__):
        return AblationMask(**value).label
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(flat_value(v) for v in value)
    return str(value)


def preset_values(name: str) -> Dict[str, Any]:
    try:
        row = settings.PRESETS[name]
    except KeyError:
        raise ConfigurationNotFound(f"Unknown preset '{name}', expected one of {sorted(settings.PRESETS)}.")
    return {PRESET_KEYS.get(key, key): value for key, value in row.items()}


def read_config_file(path) -> Dict[str, str]:
    """Parse a 'DKSE-CONFIG v1' file: the header line, then key=value lines; '#' starts a comment."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ConfigurationNotFound(f"Config file '{path}' cannot be read: {e}")
    if not lines or lines[0].strip() != settings.CONFIG_FORMAT_TAG:
        raise ConfigurationValidationError(f"{path}:1: missing '{settings.CONFIG_FORMAT_TAG}' header")
    values = {}
    for number, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigurationValidationError(f"{path}:{number}: expected 'key=value'")
        if key in values:
            raise ConfigurationValidationError(f"{path}:{number}: duplicate key '{key}'")
        values[key] = value
    return values


def format_config(values: Dict[str, str]) -> str:
    return settings.CONFIG_FORMAT_TAG + "\n" + "".join(f"{key}={value}\n" for key, value in values.items())


def resolve_values(flags: Optional[Dict[str, Any]] = None, config_path=None) -> Dict[str, Any]:
    """Merge option sources: flags over the config file over the preset; model defaults fill the rest."""
    flags = {key: value for key, value in (flags or {}).items() if value is not None}
    file_values = read_config_file(config_path) if config_path else {}
    preset = flags.get("preset") or file_values.get("preset")
    values = preset_values(preset) if preset else {}
    values.update(file_values)
    values.update(flags)
    if preset:
        values["preset"] = preset
    return values


def flat_hyper(hyper: HyperParams) -> Dict[str, str]:
    return {key: flat_value(getattr(hyper, key)) for key in HYPER_FIELDS}
