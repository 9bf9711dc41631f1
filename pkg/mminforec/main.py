from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional, Sequence

from . import config
from .errors import ConfigError, MMInfoRecError, UnknownVariantError
from .handlers.data import DataHandler
from .handlers.diagnostics import DiagnosticsHandler
from .handlers.evaluate import EvaluateHandler
from .handlers.train import TrainHandler
from .util.logging import setup_logging

COMMANDS = ("preprocess", "train", "evaluate", "gradcheck", "ablate", "synth", "inspect")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2

log = logging.getLogger("mminforec")


class _Parser(argparse.ArgumentParser):
    # usage problems surface as exit 1 instead of argparse's 2
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INVALID)


def _model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--d", type=int)
    g.add_argument("--b", type=int)
    g.add_argument("--q", type=int)
    g.add_argument("--steps", type=int)
    g.add_argument("--tau", type=float)
    g.add_argument("--dropout-rate", dest="dropout_rate", type=float)
    g.add_argument("--layers", type=int)
    g.add_argument("--heads", type=int)
    g.add_argument("--memory", choices=("none", "fc-m", "res-m"))
    g.add_argument("--loss", choices=("nce", "mince", "bpr"))
    g.add_argument("--score-source", dest="score_source", choices=("context", "memory"))


def _train_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("training")
    g.add_argument("--lr", type=float)
    g.add_argument("--l2-weight", dest="l2_weight", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--batch-size", dest="batch_size", type=int)
    g.add_argument("--patience", type=int)
    g.add_argument("--strict-grids", dest="strict_grids", action="store_true", help="reject values outside grids.yaml")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mminforec", description="memory-augmented contrastive sequential recommender lab")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}", parser_class=_Parser)

    data, train, evaluate, diag = DataHandler(), TrainHandler(), EvaluateHandler(), DiagnosticsHandler()

    p = sub.add_parser("preprocess", help="parse raw tsv files, 5-core filter, write a processed dataset")
    p.add_argument("--interactions", required=True)
    p.add_argument("--attributes")
    p.add_argument("--out", required=True)
    p.add_argument("--expect", help="reference counts name from reference_counts.yaml (e.g. beauty)")
    p.add_argument("--min-count", dest="min_count", type=int, default=5)
    p.add_argument("--max-len", dest="max_len", type=int, default=50)
    p.set_defaults(func=data.preprocess)

    p = sub.add_parser("synth", help="generate a synthetic markov corpus and its processed dataset")
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--items", type=int, default=200)
    p.add_argument("--attrs", type=int, default=20)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=data.synth)

    p = sub.add_parser("train", help="train one model, keep the best validation checkpoint")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--out", default=config.OUT_DIR)
    _model_flags(p)
    _train_flags(p)
    p.set_defaults(func=train.train)

    p = sub.add_parser("evaluate", help="full-catalog ranking metrics for a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=("valid", "test"), default="test")
    p.add_argument("--out", default=config.OUT_DIR)
    p.add_argument("--baselines", action="store_true", help="also score popularity (and the oracle for synthetic data)")
    p.set_defaults(func=evaluate.evaluate)

    p = sub.add_parser("gradcheck", help="central-difference check of the whole training loss")
    p.add_argument("--dims", type=int, default=8)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--b", type=int, default=5)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--tau", type=float, default=0.6)
    p.add_argument("--memory", choices=("none", "fc-m", "res-m"), default="res-m")
    p.add_argument("--loss", choices=("nce", "mince", "bpr"), default="mince")
    p.add_argument("--init-std", dest="init_std", type=float, default=0.5)
    p.add_argument("--max-len", dest="max_len", type=int, default=8)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--max-entries", dest="max_entries", type=int, default=0, help="sample at most this many entries per tensor (0 = all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=diag.gradcheck)

    p = sub.add_parser("ablate", help="train every cell of a variant matrix and tabulate test metrics")
    p.add_argument("--matrix", required=True, help="json: variants / memory / loss lists, sweep axes, seeds")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--out", default=config.OUT_DIR)
    _model_flags(p)
    _train_flags(p)
    p.set_defaults(func=train.ablate)

    p = sub.add_parser("inspect", help="dump memory-slot norms of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", default=config.OUT_DIR)
    p.add_argument("--active-ratio", dest="active_ratio", type=float, default=0.1)
    p.set_defaults(func=diag.inspect)

    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args_list: List[str] = list(sys.argv[1:] if argv is None else argv)
    if not args_list or args_list[0] not in COMMANDS:
        if args_list and args_list[0] in ("-h", "--help"):
            parser.print_help()
            return EXIT_OK
        parser.print_usage(sys.stderr)
        if args_list:
            sys.stderr.write(f"mminforec: error: unknown command {args_list[0]!r}\n")
        return EXIT_INVALID
    try:
        args = parser.parse_args(args_list)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INVALID

    try:
        return int(args.func(args))
    except (ConfigError, UnknownVariantError) as e:
        log.error("invalid configuration: %s", e)
        return EXIT_INVALID
    except MMInfoRecError as e:
        log.error("%s failed: %s", args.command, e)
        return EXIT_FAILED
    except Exception:
        log.exception("unhandled error in %s", args.command)
        return EXIT_FAILED


def main() -> None:
    setup_logging()
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
