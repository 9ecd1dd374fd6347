import logging
from typing import Dict, Optional

from pydantic import BaseModel, Field, validator


logger = logging.getLogger(__name__)


class MetricsReport(BaseModel):
    auc: Optional[float] = None
    acc: Optional[float] = None
    f1: Optional[float] = None
    precision_at_k: Dict[int, float] = Field(default_factory=dict)
    ndcg_at_k: Dict[int, float] = Field(default_factory=dict)
    counts: Dict[str, int] = Field(default_factory=dict)
    seed: Optional[int] = None
    epoch: Optional[int] = None
    dataset: str = ""

    @validator("auc", "acc", "f1")
    def within_unit_interval(cls, value):
        if value is not None and not 0.0 <= value <= 1.0:
            raise ValueError(f"Metric value {value} is outside [0, 1].")
        return value

    @validator("precision_at_k", "ndcg_at_k")
    def curve_within_unit_interval(cls, values):
        for k, value in values.items():
            if not 0.0 <= value <= 1.0 + 1e-12:
                raise ValueError(f"Metric value {value} at K={k} is outside [0, 1].")
        return values

    def to_text(self) -> str:
        """Flat key=value document, one metric per line."""
        lines = []
        for key in ("auc", "acc", "f1"):
            value = getattr(self, key)
            if value is not None:
                lines.append(f"{key}={value:.6f}")
        for k in sorted(self.precision_at_k):
            lines.append(f"precision@{k}={self.precision_at_k[k]:.6f}")
        for k in sorted(self.ndcg_at_k):
            lines.append(f"ndcg@{k}={self.ndcg_at_k[k]:.6f}")
        for key in sorted(self.counts):
            lines.append(f"count.{key}={self.counts[key]}")
        if self.seed is not None:
            lines.append(f"seed={self.seed}")
        if self.epoch is not None:
            lines.append(f"epoch={self.epoch}")
        lines.append(f"dataset={self.dataset}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MetricsReport":
        fields = {"precision_at_k": {}, "ndcg_at_k": {}, "counts": {}}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, value = line.partition("=")
            if key.startswith("precision@"):
                fields["precision_at_k"][int(key.split("@")[1])] = float(value)
            elif key.startswith("ndcg@"):
                fields["ndcg_at_k"][int(key.split("@")[1])] = float(value)
            elif key.startswith("count."):
                fields["counts"][key[len("count."):]] = int(value)
            elif key in ("seed", "epoch"):
                fields[key] = int(value)
            elif key == "dataset":
                fields[key] = value
            else:
                fields[key] = float(value)
        return cls.parse_obj(fields)

    def topk_csv(self) -> str:
        rows = ["k,precision,ndcg"]
        for k in sorted(set(self.precision_at_k) | set(self.ndcg_at_k)):
            rows.append(f"{k},{self.precision_at_k.get(k, 0.0):.6f},{self.ndcg_at_k.get(k, 0.0):.6f}")
        return "\n".join(rows) + "\n"

    def summary(self) -> str:
        parts = [f"{key}={getattr(self, key):.4f}" for key in ("auc", "acc", "f1") if getattr(self, key) is not None]
        return " ".join(parts)
