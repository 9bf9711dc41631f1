from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict

from ..errors import ConfigError

MEMORY_VARIANTS = ("none", "fc-m", "res-m")
LOSS_VARIANTS = ("nce", "mince", "bpr")
SCORE_SOURCES = ("context", "memory")


@dataclass
class ModelConfig:
    d: int = 64
    b: int = 10
    q: int = 2
    steps: int = 1
    tau: float = 0.6
    dropout_rate: float = 0.5
    layers: int = 1
    heads: int = 1
    max_len: int = 50
    memory_variant: str = "res-m"
    loss_variant: str = "mince"
    score_source: str = "context"
    init_std: float = 0.02

    def validate(self) -> "ModelConfig":
        if self.d <= 0:
            raise ConfigError("d", f"must be > 0, got {self.d}")
        if self.b <= 0:
            raise ConfigError("b", f"must be > 0, got {self.b}")
        if self.q < 1:
            raise ConfigError("q", f"must be >= 1, got {self.q}")
        if self.steps < 1:
            raise ConfigError("steps", f"must be >= 1, got {self.steps}")
        if not self.tau > 0:
            raise ConfigError("tau", f"must be > 0, got {self.tau}")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ConfigError("dropout_rate", f"must be in [0, 1), got {self.dropout_rate}")
        if self.layers not in (1, 2):
            raise ConfigError("layers", f"must be 1 or 2, got {self.layers}")
        if self.heads not in (1, 2):
            raise ConfigError("heads", f"must be 1 or 2, got {self.heads}")
        if self.d % self.heads:
            raise ConfigError("heads", f"d={self.d} is not divisible by {self.heads} heads")
        if self.max_len < 1:
            raise ConfigError("max_len", f"must be >= 1, got {self.max_len}")
        if self.memory_variant not in MEMORY_VARIANTS:
            raise ConfigError("memory_variant", f"must be one of {MEMORY_VARIANTS}, got {self.memory_variant!r}")
        if self.loss_variant not in LOSS_VARIANTS:
            raise ConfigError("loss_variant", f"must be one of {LOSS_VARIANTS}, got {self.loss_variant!r}")
        if self.score_source not in SCORE_SOURCES:
            raise ConfigError("score_source", f"must be one of {SCORE_SOURCES}, got {self.score_source!r}")
        if self.loss_variant == "nce" and self.q != 1:
            raise ConfigError("q", "nce uses a single positive per target; set q=1")
        if not self.init_std > 0:
            raise ConfigError("init_std", f"must be > 0, got {self.init_std}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ModelConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in raw.items() if k in names})
