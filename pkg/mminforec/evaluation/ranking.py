from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from .. import config
from ..data.dataset import PAD_ID, Dataset
from ..errors import MMInfoRecError
from ..model.network import MMInfoRec
from .metrics import hr_at_k, ndcg_at_k, ranks_of_targets

log = logging.getLogger("eval")

SPLITS = ("valid", "test")
RANK_COLUMNS = ["user", "target", "rank"]

# users x contexts -> users x (n_items + 1) scores, padding column included
Scorer = Callable[[List[List[int]]], np.ndarray]


@dataclass
class MetricsRecord:
    split: str
    hr5: float
    ndcg5: float
    hr10: float
    ndcg10: float
    n_users: int

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass
class RankResult:
    user: int
    target: int
    rank: int


@dataclass
class Evaluation:
    metrics: MetricsRecord
    ranks: List[RankResult]

    def write(self, out_dir: str, name: Optional[str] = None) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = name or self.metrics.split
        (out / f"metrics_{stem}.json").write_text(json.dumps(self.metrics.to_dict(), indent=2), encoding="utf-8")
        table = pd.DataFrame([asdict(r) for r in self.ranks], columns=RANK_COLUMNS)
        table.to_csv(out / f"ranks_{stem}.csv", index=False, lineterminator="\n")


def _check_split(dataset: Dataset, split: str) -> None:
    if split not in SPLITS:
        raise MMInfoRecError(f"unknown split {split!r}; expected one of {SPLITS}")
    if dataset.splits is None:
        raise MMInfoRecError(f"dataset has no {split} split (leave-one-out split missing)")


def summarize(split: str, ranks: np.ndarray) -> MetricsRecord:
    return MetricsRecord(
        split=split,
        hr5=hr_at_k(ranks, 5),
        ndcg5=ndcg_at_k(ranks, 5),
        hr10=hr_at_k(ranks, 10),
        ndcg10=ndcg_at_k(ranks, 10),
        n_users=int(len(ranks)),
    )


def evaluate_scorer(scorer: Scorer, dataset: Dataset, split: str, chunk: Optional[int] = None) -> Evaluation:
    """rank every user's held-out item against the whole catalog"""
    _check_split(dataset, split)
    chunk = chunk or config.EVAL_CHUNK
    users = np.arange(dataset.n_users)
    targets = np.array([dataset.target(int(u), split) for u in users], dtype=np.int64)

    all_ranks = np.zeros(len(users), dtype=np.int64)
    for start in range(0, len(users), chunk):
        sel = users[start:start + chunk]
        contexts = [dataset.context(int(u), split) for u in sel]
        scores = np.array(scorer(contexts), dtype=np.float64)
        scores[:, PAD_ID] = -np.inf
        all_ranks[sel] = ranks_of_targets(scores, targets[sel])

    ranks = [RankResult(user=int(u) + 1, target=int(t), rank=int(r)) for u, t, r in zip(users, targets, all_ranks)]
    return Evaluation(metrics=summarize(split, all_ranks), ranks=ranks)


def evaluate_full_ranking(
    model: MMInfoRec, dataset: Dataset, split: str, out_dir: Optional[str] = None, chunk: Optional[int] = None
) -> Evaluation:
    _check_split(dataset, split)
    before = model.params.checksum()
    # catalog encoded once, dropout off
    catalog_z = model.encode_catalog()

    def scorer(contexts: List[List[int]]) -> np.ndarray:
        return np.atleast_2d(model.score_catalog(model.query_vectors(contexts, catalog_z), catalog_z))

    result = evaluate_scorer(scorer, dataset, split, chunk=chunk)
    if model.params.checksum() != before:
        raise MMInfoRecError("evaluation mutated model parameters")

    m = result.metrics
    log.info("%s: hr@5=%.4f ndcg@5=%.4f hr@10=%.4f ndcg@10=%.4f (%s users)", split, m.hr5, m.ndcg5, m.hr10, m.ndcg10, m.n_users)
    if out_dir:
        result.write(out_dir)
    return result
