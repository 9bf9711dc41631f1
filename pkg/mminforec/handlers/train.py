from __future__ import annotations

import argparse
import json
import logging
import uuid
from pathlib import Path
from typing import Any, Dict

from ..data.repo_dataset import DatasetRepo
from ..errors import ConfigError
from ..evaluation.ranking import evaluate_full_ranking
from ..model.network import MMInfoRec
from ..run_config import RunConfig, load_config
from ..services.ablation_service import AblationService, AblationSpec
from ..services.train_service import TrainService

# cli flag -> run config key
OVERRIDES = {
    "d": "d", "b": "b", "q": "q", "steps": "steps", "tau": "tau",
    "dropout_rate": "dropout_rate", "layers": "layers", "heads": "heads",
    "memory": "memory_variant", "loss": "loss_variant", "score_source": "score_source",
    "lr": "lr", "l2_weight": "l2_weight", "epochs": "epochs", "seed": "seed",
    "batch_size": "batch_size", "patience": "patience", "data": "data", "out": "out",
}


def _log_id() -> str:
    return uuid.uuid4().hex[:8]


def overrides_from(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: getattr(args, flag) for flag, key in OVERRIDES.items() if getattr(args, flag, None) is not None}


def resolve(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(getattr(args, "config", None), overrides_from(args), strict_grids=getattr(args, "strict_grids", None) or None)
    if not cfg.data:
        raise ConfigError("data", "a processed dataset directory is required (--data)")
    if not cfg.out:
        raise ConfigError("out", "an output directory is required (--out)")
    return cfg


class TrainHandler:
    def __init__(self) -> None:
        self.log = logging.getLogger("trainer")

    def train(self, args: argparse.Namespace) -> int:
        rid = _log_id()
        cfg = resolve(args)
        cfg.write_resolved(cfg.out)
        ds = DatasetRepo(cfg.data).load()
        self.log.info("[%s] train: %s users, %s items -> %s", rid, ds.n_users, ds.catalog.n_items, cfg.out)

        model = MMInfoRec.create(cfg.model, ds.catalog, seed=cfg.train.seed)
        result = TrainService(out_dir=cfg.out).train(model, ds, cfg.train)
        test = evaluate_full_ranking(model, ds, "test", out_dir=cfg.out).metrics
        print(json.dumps({"best_epoch": result.best_epoch, "epochs_run": len(result.log), "test": test.to_dict()}, indent=2))
        return 0

    def ablate(self, args: argparse.Namespace) -> int:
        rid = _log_id()
        # names are checked before the dataset is even read
        spec = AblationSpec.load(args.matrix)
        cfg = resolve(args)
        cfg.write_resolved(cfg.out)
        ds = DatasetRepo(cfg.data).load()
        self.log.info("[%s] ablate: %s cells -> %s", rid, len(spec.cells()), cfg.out)
        table = AblationService(out_dir=cfg.out).run(ds, cfg.model, cfg.train, spec)
        summary = AblationService.summary(table, by=[c for c in ("variant", "memory", "loss") if table[c].notna().any()])
        summary.to_csv(Path(cfg.out) / "ablation_summary.csv", index=False)
        print(summary.to_string(index=False))
        return 0
