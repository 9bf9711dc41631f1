from __future__ import annotations

# ablation service: cartesian product of named variants and axes, one training run per cell

import itertools
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import pandas as pd

from .. import grids
from ..data.dataset import Dataset
from ..errors import ConfigError, UnknownVariantError
from ..evaluation.ranking import evaluate_full_ranking
from ..model.config import LOSS_VARIANTS, MEMORY_VARIANTS, ModelConfig
from ..model.network import MMInfoRec
from ..util.run_log import record_event
from .train_service import TrainConfig, TrainService

RESULTS_FILE = "ablation.csv"
SWEEP_AXES = ("b", "tau", "steps", "q", "lr")


@dataclass
class AblationSpec:
    variants: List[str] = field(default_factory=list)
    memory: List[str] = field(default_factory=list)
    loss: List[str] = field(default_factory=list)
    sweep: Dict[str, List[Any]] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=lambda: [0])

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "AblationSpec":
        known = {"variants", "memory", "loss", "sweep", "seeds"}
        for key in raw:
            if key not in known:
                raise ConfigError(f"ablation.{key}", "unknown key")
        spec = cls(
            variants=[str(v) for v in raw.get("variants", [])],
            memory=[str(v) for v in raw.get("memory", [])],
            loss=[str(v) for v in raw.get("loss", [])],
            sweep={str(k): list(v) for k, v in (raw.get("sweep") or {}).items()},
            seeds=[int(s) for s in raw.get("seeds", [0])],
        )
        return spec.validate()

    @classmethod
    def load(cls, path: str) -> "AblationSpec":
        p = Path(path)
        if not p.is_file():
            raise ConfigError("matrix", f"no such file: {path}")
        try:
            return cls.from_dict(json.loads(p.read_text(encoding="utf-8")))
        except json.JSONDecodeError as e:
            raise ConfigError("matrix", f"{path} is not valid json: {e}") from e

    def validate(self) -> "AblationSpec":
        # every name is checked before anything trains
        for name in self.variants:
            grids.variant(name)
        for name in self.memory:
            if name not in MEMORY_VARIANTS:
                raise UnknownVariantError(f"unknown memory variant {name!r}; known: {', '.join(MEMORY_VARIANTS)}")
        for name in self.loss:
            if name not in LOSS_VARIANTS:
                raise UnknownVariantError(f"unknown loss variant {name!r}; known: {', '.join(LOSS_VARIANTS)}")
        for axis, values in self.sweep.items():
            if axis not in SWEEP_AXES:
                raise ConfigError(f"sweep.{axis}", f"sweepable axes are {SWEEP_AXES}")
            if not values:
                raise ConfigError(f"sweep.{axis}", "empty value list")
        if not self.seeds:
            raise ConfigError("seeds", "need at least one seed")
        return self

    def cells(self) -> List[Dict[str, Any]]:
        axes: List[tuple] = [
            ("variant", self.variants or [None]),
            ("memory", self.memory or [None]),
            ("loss", self.loss or [None]),
        ]
        axes += [(k, v) for k, v in sorted(self.sweep.items())]
        axes.append(("seed", self.seeds))
        names = [a for a, _ in axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in axes))]


def cell_config(model: ModelConfig, train: TrainConfig, cell: Mapping[str, Any]) -> tuple:
    mkw: Dict[str, Any] = {}
    if cell.get("variant"):
        mkw.update(grids.variant(cell["variant"]))
    if cell.get("memory"):
        mkw["memory_variant"] = cell["memory"]
    if cell.get("loss"):
        mkw["loss_variant"] = cell["loss"]
    for axis in ("b", "tau", "steps", "q"):
        if axis in cell:
            mkw[axis] = cell[axis]
    if mkw.get("loss_variant", model.loss_variant) != "mince":
        # single positive outside mince
        mkw["q"] = 1
    tkw: Dict[str, Any] = {"seed": int(cell.get("seed", train.seed))}
    if "lr" in cell:
        tkw["lr"] = float(cell["lr"])
    return replace(model, **mkw).validate(), replace(train, **tkw).validate()


def cell_name(cell: Mapping[str, Any]) -> str:
    parts = [f"{k}={v}" for k, v in cell.items() if v is not None]
    return "_".join(p.replace("+", "plus").replace("=", "-") for p in parts) or "base"


class AblationService:
    def __init__(self, out_dir: Optional[str] = None) -> None:
        self.out_dir = out_dir
        self.log = logging.getLogger("ablation")

    def run(self, dataset: Dataset, model: ModelConfig, train: TrainConfig, spec: AblationSpec) -> pd.DataFrame:
        spec.validate()
        cells = spec.cells()
        # resolve every cell up front so a bad combination fails before any run
        resolved = [cell_config(model, train, c) for c in cells]
        self.log.info("ablation: %s cells", len(cells))

        rows: List[Dict[str, Any]] = []
        for cell, (mc, tc) in zip(cells, resolved):
            name = cell_name(cell)
            cell_dir = str(Path(self.out_dir) / name) if self.out_dir else None
            net = MMInfoRec.create(mc, dataset.catalog, seed=tc.seed)
            result = TrainService(out_dir=cell_dir).train(net, dataset, tc)
            test = evaluate_full_ranking(net, dataset, "test", out_dir=cell_dir).metrics
            row: Dict[str, Any] = {"cell": name}
            row.update({k: v for k, v in cell.items()})
            row.update({
                "memory_variant": mc.memory_variant, "loss_variant": mc.loss_variant, "q": mc.q,
                "b": mc.b, "tau": mc.tau, "steps": mc.steps, "lr": tc.lr,
                "best_epoch": result.best_epoch,
                "valid_ndcg10": result.best_ndcg10 if result.log else float("nan"),
                "hr5": test.hr5, "ndcg5": test.ndcg5, "hr10": test.hr10, "ndcg10": test.ndcg10,
            })
            rows.append(row)
            self.log.info("cell %s: test hr@5=%.4f ndcg@10=%.4f", name, test.hr5, test.ndcg10)

        table = pd.DataFrame(rows)
        if self.out_dir:
            path = Path(self.out_dir) / RESULTS_FILE
            path.parent.mkdir(parents=True, exist_ok=True)
            table.to_csv(path, index=False)
            record_event(out_dir=self.out_dir, level="info", source="ablation",
                         message=f"ablation finished: {len(rows)} runs", data={"results": str(path)})
        return table

    @staticmethod
    def summary(table: pd.DataFrame, by: Sequence[str] = ("variant",)) -> pd.DataFrame:
        """mean test metrics per group across seeds"""
        keys = [k for k in by if k in table.columns] or ["cell"]
        return table.groupby(keys, dropna=False)[["hr5", "ndcg5", "hr10", "ndcg10"]].mean().reset_index()
