# mminforec/errors.py
from __future__ import annotations

from typing import Any, Optional


class MMInfoRecError(Exception):
    """root of everything this package raises on purpose"""


# --- numeric core ---

class ShapeError(MMInfoRecError):
    def __init__(self, node: str, detail: str):
        self.node = node
        super().__init__(f"{node}: {detail}")


class NonFiniteError(MMInfoRecError):
    pass


class GraphStateError(MMInfoRecError):
    pass


class NonDeterministicGraph(MMInfoRecError):
    pass


# --- model / data ---

class IdOutOfRange(MMInfoRecError):
    def __init__(self, kind: str, value: int, upper: int):
        self.kind = kind
        self.value = value
        super().__init__(f"{kind} id {value} out of range [0, {upper}]")


class NoNegativesError(MMInfoRecError):
    pass


class ParseError(MMInfoRecError):
    def __init__(self, message: str, report: Optional[Any] = None):
        self.report = report
        super().__init__(message)


class EmptyDatasetError(MMInfoRecError):
    pass


class DatasetVersionMismatch(MMInfoRecError):
    pass


# --- config / runs ---

class ConfigError(MMInfoRecError):
    def __init__(self, field: str, detail: str):
        self.field = field
        super().__init__(f"{field}: {detail}")


class UnknownVariantError(MMInfoRecError):
    pass


class NonFiniteGradient(MMInfoRecError):
    def __init__(self, param: str):
        self.param = param
        super().__init__(f"non-finite gradient in {param}")


class TrainingAborted(MMInfoRecError):
    def __init__(self, message: str, result: Optional[Any] = None):
        self.result = result
        super().__init__(message)
