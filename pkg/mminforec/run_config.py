from __future__ import annotations

# one flat json document: model fields + training fields + paths

import json
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from . import grids
from .errors import ConfigError
from .model.config import ModelConfig
from .services.train_service import TrainConfig

log = logging.getLogger("config")

RESOLVED_FILE = "config.resolved.json"
PATH_KEYS = ("data", "out")
STRICT_FIELDS = ("b", "steps", "q", "tau", "lr", "l2_weight")

_MODEL_FIELDS = {f.name: f for f in fields(ModelConfig)}
_TRAIN_FIELDS = {f.name: f for f in fields(TrainConfig)}


@dataclass
class RunConfig:
    model: ModelConfig
    train: TrainConfig
    data: Optional[str] = None
    out: Optional[str] = None
    strict_grids: bool = False

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        out.update(self.model.to_dict())
        out.update(self.train.to_dict())
        out.update({"data": self.data, "out": self.out, "strict_grids": self.strict_grids})
        return out

    def validate(self) -> "RunConfig":
        self.model.validate()
        self.train.validate()
        if self.strict_grids:
            values = self.to_dict()
            for key in STRICT_FIELDS:
                grids.check_grid(key, values[key])
        return self

    def write_resolved(self, out_dir: str) -> Path:
        path = Path(out_dir) / RESOLVED_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        return path


def _coerce(key: str, value: Any, kind: Any) -> Any:
    kind = kind if isinstance(kind, str) else getattr(kind, "__name__", str(kind))
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    return value


def _split(raw: Mapping[str, Any]) -> RunConfig:
    model_kw: Dict[str, Any] = {}
    train_kw: Dict[str, Any] = {}
    extra: Dict[str, Any] = {}
    for key, value in raw.items():
        if key in _MODEL_FIELDS:
            model_kw[key] = _coerce(key, value, _MODEL_FIELDS[key].type)
        elif key in _TRAIN_FIELDS:
            train_kw[key] = _coerce(key, value, _TRAIN_FIELDS[key].type)
        elif key in PATH_KEYS:
            if value is not None and not isinstance(value, str):
                raise ConfigError(key, f"expected a path string, got {value!r}")
            extra[key] = value
        elif key == "strict_grids":
            if not isinstance(value, bool):
                raise ConfigError(key, f"expected true/false, got {value!r}")
            extra[key] = value
        else:
            raise ConfigError(key, "unknown key")
    return RunConfig(model=ModelConfig(**model_kw), train=TrainConfig(**train_kw), **extra)


def load_config(
    path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    strict_grids: Optional[bool] = None,
) -> RunConfig:
    """defaults < json file < cli flags, then validated"""
    merged: Dict[str, Any] = grids.defaults()
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError("config", f"no such file: {path}")
        try:
            doc = json.loads(p.read_text(encoding="utf-8") or "{}")
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"{path} is not valid json: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError("config", f"{path} must hold a json object")
        # unknown keys are caught by _split
        merged.update(doc)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    if strict_grids is not None:
        merged["strict_grids"] = strict_grids
    cfg = _split(merged).validate()
    log.debug("resolved config: %s", cfg.to_dict())
    return cfg
