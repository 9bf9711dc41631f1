from __future__ import annotations

import argparse
import json
import logging
import uuid
from pathlib import Path

import numpy as np

from .. import grids
from ..data.parse import parse
from ..data.preprocess import check_reference, preprocess
from ..data.repo_dataset import DatasetRepo
from ..data.split import split_leave_one_out
from ..data.synthetic import generate_synthetic
from ..util.run_log import record_event

TRANSITION_FILE = "transition.npy"


def _log_id() -> str:
    return uuid.uuid4().hex[:8]


def echo_args(out_dir: str, args: argparse.Namespace) -> None:
    """config.resolved.json for commands without a RunConfig"""
    path = Path(out_dir) / "config.resolved.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = {k: v for k, v in vars(args).items() if k != "func"}
    path.write_text(json.dumps(raw, indent=2, sort_keys=True, default=str), encoding="utf-8")


class DataHandler:
    def __init__(self) -> None:
        self.log = logging.getLogger("data")

    def preprocess(self, args: argparse.Namespace) -> int:
        rid = _log_id()
        self.log.info("[%s] preprocess: %s (attributes: %s)", rid, args.interactions, args.attributes)
        records = parse(args.interactions, args.attributes)
        ds = preprocess(records, min_count=args.min_count, max_len=args.max_len)
        stats = ds.stats()
        if args.expect:
            try:
                check_reference(stats, args.expect.lower(), grids.reference_counts())
            except Exception as e:
                record_event(out_dir=args.out, level="error", source="data", message=str(e), data=stats)
                raise
        DatasetRepo(args.out).save(ds)
        echo_args(args.out, args)
        print(json.dumps(stats, indent=2))
        return 0

    def synth(self, args: argparse.Namespace) -> int:
        rid = _log_id()
        self.log.info("[%s] synth: users=%s items=%s attrs=%s seed=%s", rid, args.users, args.items, args.attrs, args.seed)
        corpus = generate_synthetic(users=args.users, items=args.items, attrs=args.attrs, seed=args.seed)
        out = Path(args.out)
        raw = out / "raw"
        raw.mkdir(parents=True, exist_ok=True)
        with (raw / "interactions.tsv").open("w", encoding="utf-8") as f:
            for r in corpus.records.interactions:
                f.write(f"{r.user}\t{r.item}\t{r.timestamp}\n")
        with (raw / "attributes.tsv").open("w", encoding="utf-8") as f:
            for item, attrs in corpus.records.attributes.items():
                f.write("\t".join((item,) + attrs) + "\n")

        ds = preprocess(corpus.records)
        DatasetRepo(str(out)).save(ds)
        # oracle ranking needs the true dynamics in internal ids
        np.save(out / TRANSITION_FILE, corpus.internal_transition(ds))
        echo_args(str(out), args)
        print(json.dumps(split_leave_one_out(ds).stats(), indent=2))
        return 0
