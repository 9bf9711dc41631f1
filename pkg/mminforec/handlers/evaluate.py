from __future__ import annotations

import argparse
import json
import logging
import uuid
from pathlib import Path

import numpy as np

from ..data.repo_dataset import DatasetRepo
from ..errors import ConfigError
from ..evaluation.baselines import evaluate_oracle, evaluate_popularity, random_expectation
from ..evaluation.ranking import evaluate_full_ranking
from ..model.checkpoint import CheckpointRepo
from ..model.network import MMInfoRec
from .data import TRANSITION_FILE, echo_args


def _log_id() -> str:
    return uuid.uuid4().hex[:8]


def checkpoint_dir(path: str) -> str:
    """accepts a checkpoint directory or a run directory holding one"""
    p = Path(path)
    if (p / "manifest.json").exists():
        return str(p)
    if (p / "checkpoint" / "manifest.json").exists():
        return str(p / "checkpoint")
    raise ConfigError("checkpoint", f"no checkpoint found at {path}")


class EvaluateHandler:
    def __init__(self) -> None:
        self.log = logging.getLogger("eval")

    def evaluate(self, args: argparse.Namespace) -> int:
        rid = _log_id()
        params, cfg = CheckpointRepo(checkpoint_dir(args.checkpoint)).load()
        ds = DatasetRepo(args.data).load()
        if params["emb_item"].shape[0] != ds.catalog.n_items + 1:
            raise ConfigError("data", f"checkpoint has {params['emb_item'].shape[0] - 1} items, dataset has {ds.catalog.n_items}")
        model = MMInfoRec(cfg.validate(), params, ds.catalog)
        self.log.info("[%s] evaluate %s on %s/%s", rid, args.checkpoint, args.data, args.split)

        report = {"model": evaluate_full_ranking(model, ds, args.split, out_dir=args.out).metrics.to_dict()}
        if args.baselines:
            pop = evaluate_popularity(ds, args.split)
            pop.write(args.out, name=f"{args.split}_popularity")
            report["popularity"] = pop.metrics.to_dict()
            trans = Path(args.data) / TRANSITION_FILE
            if trans.exists():
                oracle = evaluate_oracle(ds, np.load(trans), args.split)
                oracle.write(args.out, name=f"{args.split}_oracle")
                report["oracle"] = oracle.metrics.to_dict()
            report["random_hr5"] = random_expectation(ds, 5)
        echo_args(args.out, args)
        print(json.dumps(report, indent=2))
        return 0
