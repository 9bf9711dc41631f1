from __future__ import annotations

# train service: epochs of contrastive steps, validation ranking, early stop

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from ..contrastive import batch_seed, build_contrastive_batch, contrastive_loss
from ..core import Graph
from ..data.batches import make_batches
from ..data.dataset import Dataset
from ..errors import ConfigError, NoNegativesError, NonFiniteGradient, TrainingAborted
from ..evaluation.ranking import MetricsRecord, evaluate_full_ranking
from ..model.checkpoint import CheckpointRepo
from ..model.network import MMInfoRec
from ..model.params import ModelParams
from ..util.run_log import record_event
from .optim import AdamState, adam_step

LOG_COLUMNS = ["epoch", "loss", "hr5", "ndcg5", "hr10", "ndcg10"]
LOG_HEADER = ",".join(LOG_COLUMNS)
LOG_FILE = "train_log.csv"
CHECKPOINT_DIR = "checkpoint"


@dataclass
class TrainConfig:
    lr: float = 0.001
    l2_weight: float = 0.0
    epochs: int = 50
    seed: int = 0
    batch_size: int = 256
    # epochs without a validation ndcg@10 gain before stopping
    patience: int = 10

    def validate(self) -> "TrainConfig":
        if not self.lr > 0:
            raise ConfigError("lr", f"must be > 0, got {self.lr}")
        if self.l2_weight < 0:
            raise ConfigError("l2_weight", f"must be >= 0, got {self.l2_weight}")
        if self.epochs < 0:
            raise ConfigError("epochs", f"must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError("batch_size", f"must be >= 1, got {self.batch_size}")
        if self.patience < 1:
            raise ConfigError("patience", f"must be >= 1, got {self.patience}")
        return self

    def to_dict(self):
        return asdict(self)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    hr5: float
    ndcg5: float
    hr10: float
    ndcg10: float


@dataclass
class TrainResult:
    log: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_ndcg10: float = -math.inf
    best_params: Optional[ModelParams] = None
    stopped_early: bool = False
    checkpoint: Optional[str] = None

    @property
    def losses(self) -> List[float]:
        return [r.loss for r in self.log]


class TrainService:
    def __init__(self, out_dir: Optional[str] = None) -> None:
        self.out_dir = out_dir
        self.log = logging.getLogger("trainer")

    # ---------- one step / one epoch ----------

    def step(self, model: MMInfoRec, batch, state: AdamState, tc: TrainConfig, seed_base: int) -> float:
        cfg = model.cfg
        with Graph(name="train") as graph:
            cb = build_contrastive_batch(model, batch, seed_base)
            loss = contrastive_loss(cb, cfg.loss_variant, cfg.tau, rng=np.random.default_rng(seed_base))
        value = loss.item()
        if not math.isfinite(value):
            return value
        grads = graph.backward(loss, list(model.params))
        adam_step(model.params, grads, state, tc.lr, tc.l2_weight)
        return value

    def run_epoch(self, model: MMInfoRec, dataset: Dataset, state: AdamState, tc: TrainConfig, epoch: int) -> float:
        losses: List[float] = []
        batches = make_batches(dataset, tc.batch_size, shuffle_seed=batch_seed(tc.seed, epoch, 0))
        for step, batch in enumerate(batches, start=1):
            try:
                value = self.step(model, batch, state, tc, batch_seed(tc.seed, epoch, step))
            except NoNegativesError as e:
                self.log.warning("epoch %s step %s skipped: %s", epoch, step, e)
                continue
            if not math.isfinite(value):
                return value
            losses.append(value)
        return float(np.mean(losses)) if losses else float("nan")

    # ---------- full run ----------

    def _save_best(self, model: MMInfoRec, result: TrainResult, tc: TrainConfig) -> None:
        result.best_params = model.params.copy()
        if self.out_dir:
            path = Path(self.out_dir) / CHECKPOINT_DIR
            CheckpointRepo(str(path)).save(
                result.best_params, model.cfg,
                extra={"epoch": result.best_epoch, "ndcg10": result.best_ndcg10, "train": tc.to_dict()},
            )
            result.checkpoint = str(path)

    def _write_log(self, result: TrainResult) -> None:
        if not self.out_dir:
            return
        path = Path(self.out_dir) / LOG_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        # full float precision
        table = pd.DataFrame([asdict(r) for r in result.log], columns=LOG_COLUMNS)
        table.to_csv(path, index=False, lineterminator="\n", na_rep="nan")

    def _abort(self, model: MMInfoRec, result: TrainResult, message: str) -> None:
        # roll back to the best parameters seen so far
        if result.best_params is not None:
            model.params.load_from(result.best_params)
        self._write_log(result)
        record_event(out_dir=self.out_dir, level="error", source="trainer", message=message,
                     data={"best_epoch": result.best_epoch, "checkpoint": result.checkpoint})
        raise TrainingAborted(message, result)

    def train(self, model: MMInfoRec, dataset: Dataset, tc: TrainConfig) -> TrainResult:
        tc.validate()
        model.cfg.validate()
        if dataset.splits is None:
            raise ConfigError("data", "dataset has no leave-one-out split")

        state = AdamState.for_params(model.params)
        result = TrainResult()
        # initialization is the fallback checkpoint
        self._save_best(model, result, tc)
        bad_epochs = 0

        for epoch in range(1, tc.epochs + 1):
            try:
                loss = self.run_epoch(model, dataset, state, tc, epoch)
            except NonFiniteGradient as e:
                self._abort(model, result, f"epoch {epoch} aborted: {e}")
            if not math.isfinite(loss):
                self._abort(model, result, f"epoch {epoch}: training loss is {loss}")

            m: MetricsRecord = evaluate_full_ranking(model, dataset, "valid").metrics
            rec = EpochRecord(epoch, loss, m.hr5, m.ndcg5, m.hr10, m.ndcg10)
            result.log.append(rec)
            self.log.info("epoch %s: loss=%.5f hr@5=%.4f ndcg@10=%.4f", epoch, loss, m.hr5, m.ndcg10)

            if m.ndcg10 > result.best_ndcg10:
                result.best_ndcg10, result.best_epoch = m.ndcg10, epoch
                self._save_best(model, result, tc)
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs >= tc.patience:
                    result.stopped_early = True
                    record_event(out_dir=self.out_dir, level="info", source="trainer",
                                 message=f"early stop after epoch {epoch}",
                                 data={"best_epoch": result.best_epoch, "best_ndcg10": result.best_ndcg10})
                    break

        self._write_log(result)
        if result.best_params is not None:
            model.params.load_from(result.best_params)
        record_event(out_dir=self.out_dir, level="info", source="trainer",
                     message=f"best checkpoint from epoch {result.best_epoch}",
                     data={"ndcg10": result.best_ndcg10 if result.log else None, "checkpoint": result.checkpoint})
        return result
