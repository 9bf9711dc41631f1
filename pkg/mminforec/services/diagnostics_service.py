from __future__ import annotations

# diagnostics: full-pipeline gradient check per parameter group, memory-slot norms

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..contrastive import build_contrastive_batch, contrastive_loss
from ..core import Graph, GradCheckReport, check_gradient
from ..data.batches import batch_of
from ..data.dataset import Catalog
from ..errors import ConfigError
from ..model.config import ModelConfig
from ..model.network import MMInfoRec
from ..model.params import GROUPS, ModelParams, group_of

NORMS_FILE = "memory_norms.csv"
GRADCHECK_FILE = "gradcheck.csv"
ACTIVE_RATIO = 0.1


@dataclass
class GroupReport:
    group: str
    max_rel_error: float
    checked: int
    skipped: int
    worst_param: Optional[str] = None


def tiny_problem(batch: int, n_items: int = 12, n_attrs: int = 6, length: int = 6, seed: int = 0):
    """small random catalog and left-padded batch for finite-difference checks"""
    rng = np.random.default_rng(seed)
    item_attrs = {
        i: tuple(sorted(rng.choice(np.arange(1, n_attrs + 1), size=int(rng.integers(1, 3)), replace=False).tolist()))
        for i in range(1, n_items + 1)
    }
    catalog = Catalog(n_items=n_items, n_attrs=n_attrs, item_attrs=item_attrs)
    seqs = [rng.integers(1, n_items + 1, size=int(rng.integers(3, length + 1))).tolist() for _ in range(batch)]
    return catalog, batch_of(seqs, list(range(batch)))


class DiagnosticsService:
    def __init__(self, out_dir: Optional[str] = None) -> None:
        self.out_dir = out_dir
        self.log = logging.getLogger("diagnostics")

    # ---------- gradient check ----------

    def gradcheck(
        self,
        cfg: ModelConfig,
        batch: int = 4,
        step: float = 1e-3,
        seed: int = 0,
        max_entries: Optional[int] = None,
    ) -> Dict[str, GroupReport]:
        cfg.validate()
        catalog, seq_batch = tiny_problem(batch, seed=seed)
        model = MMInfoRec.create(cfg, catalog, seed=seed)
        seed_base = 1000 + seed * 256
        rng_seed = seed

        def program(inputs, masks):
            cb = build_contrastive_batch(model, seq_batch, seed_base)
            return {"loss": contrastive_loss(cb, cfg.loss_variant, cfg.tau, rng=np.random.default_rng(rng_seed))}

        graph = Graph(program=program, name="pipeline")
        reports: Dict[str, GroupReport] = {g: GroupReport(g, 0.0, 0, 0) for g in GROUPS}
        for name, tensor in model.params.items():
            r: GradCheckReport = check_gradient(graph, {}, tensor, step=step, max_entries=max_entries, seed=seed)
            g = reports[group_of(name)]
            g.checked += r.checked
            g.skipped += r.skipped
            if r.max_rel_error >= g.max_rel_error:
                g.max_rel_error, g.worst_param = r.max_rel_error, name
            self.log.debug("%s: max rel err %.3e (%s checked, %s skipped)", name, r.max_rel_error, r.checked, r.skipped)

        # groups without parameters (memory off) are left out
        out = {k: v for k, v in reports.items() if v.checked or v.skipped}
        if self.out_dir:
            path = Path(self.out_dir) / GRADCHECK_FILE
            path.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame([vars(v) for v in out.values()]).to_csv(path, index=False)
        return out

    # ---------- memory inspection ----------

    def memory_norms(self, params: ModelParams, active_ratio: float = ACTIVE_RATIO) -> pd.DataFrame:
        if "mem.M" not in params:
            raise ConfigError("memory_variant", "checkpoint has no memory bank (memory_variant is none)")
        if not (0.0 <= active_ratio <= 1.0):
            raise ConfigError("active_ratio", f"must be in [0, 1], got {active_ratio}")
        norms = np.linalg.norm(params["mem.M"].data, axis=1)
        total = norms.sum()
        table = pd.DataFrame({
            "slot": np.arange(len(norms)),
            "l2_norm": norms,
            "share": norms / total if total > 0 else np.zeros_like(norms),
        })
        active = int(np.count_nonzero(norms >= active_ratio * norms.max())) if len(norms) else 0
        table.attrs["active_slots"] = active
        self.log.info("memory: %s slots, %s active (>= %.0f%% of the largest norm)", len(norms), active, 100 * active_ratio)
        if self.out_dir:
            path = Path(self.out_dir) / NORMS_FILE
            path.parent.mkdir(parents=True, exist_ok=True)
            table.to_csv(path, index=False)
        return table


def failing_groups(reports: Dict[str, GroupReport], tolerance: float) -> List[str]:
    return [g for g, r in reports.items() if not r.max_rel_error < tolerance]
