from __future__ import annotations

import os
from functools import lru_cache
from typing import Any, Dict

import yaml

from . import config
from .errors import ConfigError, UnknownVariantError

_RESOURCES_DIR = config.RESOURCES_PATH


def _load(path: str) -> Dict[str, Any]:
    if not os.path.isfile(path):
        raise ConfigError("resources", f"missing resource file {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigError("resources", f"{path} must hold a mapping")
    return data


@lru_cache(maxsize=None)
def _resource(name: str) -> Dict[str, Any]:
    return _load(os.path.join(_RESOURCES_DIR, name))


def grids() -> Dict[str, list]:
    # env override wins over the packaged file
    return {str(k): list(v) for k, v in _load(config.GRIDS_PATH).items()}


def defaults() -> Dict[str, Any]:
    return dict(_resource("defaults.yaml"))


def variants() -> Dict[str, Dict[str, Any]]:
    return {str(k): dict(v or {}) for k, v in _resource("variants.yaml").items()}


def variant(name: str) -> Dict[str, Any]:
    known = variants()
    if name not in known:
        raise UnknownVariantError(f"unknown variant {name!r}; known: {', '.join(known)}")
    return dict(known[name])


def reference_counts() -> Dict[str, Dict[str, int]]:
    return {str(k).lower(): {str(f): int(n) for f, n in v.items()} for k, v in _resource("reference_counts.yaml").items()}


def check_grid(field: str, value: Any) -> None:
    allowed = grids().get(field)
    if allowed is None:
        return
    if not any(float(value) == float(a) for a in allowed):
        raise ConfigError(field, f"{value} is outside the grid {allowed}")
