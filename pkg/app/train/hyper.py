from enum import Enum

from pydantic import BaseModel, Field, validator

from app import settings
from app.model import AblationMask, AggregationTarget, GroupingMode, NormalizationMode


class ContrastiveLogit(str, Enum):
    # sigmoid(u . v) / tau, or the plain u . v / tau
    SIGMOID = "sigmoid"
    DOT = "dot"


class HyperParams(BaseModel):
    l_u: int = Field(1, ge=1)
    n_u: int = Field(8, ge=1)
    l_v: int = Field(1, ge=1)
    n_v: int = Field(8, ge=1)
    dim: int = Field(16, ge=1)
    n_queries: int = Field(2, ge=1)
    l2: float = Field(1e-5, ge=0.0)
    tau: float = Field(0.2, gt=0.0)
    learning_rate: float = Field(1e-3, gt=0.0)
    batch_size: int = Field(1024, ge=1)
    epochs: int = Field(100, ge=0)
    patience: int = Field(5, ge=1)
    grouping: GroupingMode = GroupingMode.GLOBAL
    mask: AblationMask = Field(default_factory=AblationMask)
    use_contrastive: bool = True
    # false scores the bare embeddings, sigmoid(e_u . e_v), with no graph neighborhood
    use_neighborhood: bool = True
    contrastive_logit: ContrastiveLogit = ContrastiveLogit.SIGMOID
    normalization: NormalizationMode = NormalizationMode.SOFTMAX
    aggregation: AggregationTarget = AggregationTarget.SELECTED
    seed: int = settings.DKSE_DEFAULT_SEED

    class Config:
        validate_assignment = True

    @validator("mask", pre=True)
    def mask_from_label(cls, value):
        # "full" or "w/o R" style labels are accepted alongside mappings
        if isinstance(value, str):
            if value == "full":
                return AblationMask()
            dropped = [part.strip() for part in value.replace("w/o", "").split(",") if part.strip()]
            flags = {}
            for component in dropped:
                flags.update(AblationMask.without(component).dict(exclude_unset=True))
            return AblationMask(**flags)
        return value

    def route_counts(self):
        return (
            sum(self.n_u ** d for d in range(1, self.l_u + 1)),
            sum(self.n_v ** d for d in range(1, self.l_v + 1)),
        )
