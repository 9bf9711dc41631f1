from __future__ import annotations

import argparse
import logging

from ..model.checkpoint import CheckpointRepo
from ..model.config import ModelConfig
from ..services.diagnostics_service import DiagnosticsService, failing_groups
from .data import echo_args
from .evaluate import checkpoint_dir


class DiagnosticsHandler:
    def __init__(self) -> None:
        self.log = logging.getLogger("diagnostics")

    def gradcheck(self, args: argparse.Namespace) -> int:
        cfg = ModelConfig(
            d=args.dims, b=args.b, q=args.q, steps=args.steps, tau=args.tau,
            memory_variant=args.memory, loss_variant=args.loss,
            init_std=args.init_std, max_len=args.max_len,
        )
        if args.out:
            echo_args(args.out, args)
        reports = DiagnosticsService(out_dir=args.out).gradcheck(
            cfg, batch=args.batch, step=args.step, seed=args.seed, max_entries=args.max_entries or None,
        )
        print(f"{'group':<8} {'max_rel_error':>14} {'checked':>8} {'skipped':>8}  worst")
        for r in reports.values():
            print(f"{r.group:<8} {r.max_rel_error:>14.3e} {r.checked:>8} {r.skipped:>8}  {r.worst_param}")
        bad = failing_groups(reports, args.tolerance)
        if bad:
            self.log.error("gradient check failed for: %s", ", ".join(bad))
            return 2
        return 0

    def inspect(self, args: argparse.Namespace) -> int:
        params, _ = CheckpointRepo(checkpoint_dir(args.checkpoint)).load()
        echo_args(args.out, args)
        table = DiagnosticsService(out_dir=args.out).memory_norms(params, active_ratio=args.active_ratio)
        print(table.to_string(index=False))
        print(f"active slots: {table.attrs['active_slots']} of {len(table)}")
        return 0
