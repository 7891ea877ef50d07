"""Command-line driver: ``dfframe <stage> [--config FILE] [--seed N] [--out DIR]``.

Exit codes: 0 success, 1 other failure, 2 configuration error, 3 data or
missing-stage error, 4 numeric divergence during training.
"""

from __future__ import annotations

import argparse
import sys

from . import analytics, config
from .errors import (ConfigError, CoverageError, DataError, DFFrameError, DivergenceError, InputError,
                     PairingError, ParameterError, StageError)
from .runner import DISPLAY, Run

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3, 4


def _parser():
    parser = argparse.ArgumentParser(prog="dfframe", description="Deepfake detector framework experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (defaults apply for omitted keys)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="run directory (default: $DFFRAME_OUT/run-<config hash>)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write the synthetic video dataset")
    sub.add_parser("preprocess", parents=[common], help="crop 40-frame face windows")
    p = sub.add_parser("train", parents=[common], help="train one framework cell")
    p.add_argument("--cell", required=True, choices=sorted(DISPLAY), help="which detector to train")
    sub.add_parser("evaluate", parents=[common], help="PR-AUC, precision at recall, McNemar tables")
    p = sub.add_parser("analytics", parents=[common], help="production equation and subgroup balance")
    p.add_argument("--profiles", help="CSV with columns name,n,k (default: profiles from the config)")
    p.add_argument("--check-enumeration", action="store_true",
                   help="recount each subgroup's deepfakes by brute-force enumeration")
    sub.add_parser("report", parents=[common], help="summarise the run")
    return parser


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    stage = args.command
    try:
        cfg = config.load(args.config, args.seed)
        r = Run(cfg, args.out)
        if stage == "generate":
            print(r.generate())
        elif stage == "preprocess":
            r.preprocess()
            stats = r.manifest.stage("preprocess")
            print(f"{r.pre_dir} ({stats['excluded']} videos excluded)")
        elif stage == "train":
            log = r.train(args.cell)
            print(f"{DISPLAY[args.cell]}: best val accuracy {log.best_val_accuracy:.3f} at epoch "
                  f"{log.best_epoch}, stopped at {log.stopped_epoch} ({log.stop_reason})")
        elif stage == "evaluate":
            r.evaluate()
            print((r.eval_dir / "report.txt").read_text(), end="")
        elif stage == "analytics":
            profiles = analytics.read_profiles(args.profiles) if args.profiles else None
            rows, _ = r.analytics(profiles, args.check_enumeration)
            print(analytics.format_balance(rows), end="")
        elif stage == "report":
            print(r.report(), end="")
    except (ConfigError, ParameterError) as exc:
        return _fail(stage, exc, EXIT_CONFIG)
    except (DataError, InputError, StageError, CoverageError, PairingError) as exc:
        return _fail(stage, exc, EXIT_DATA)
    except DivergenceError as exc:
        return _fail(stage, exc, EXIT_DIVERGED)
    except (DFFrameError, ArithmeticError, OSError) as exc:
        return _fail(stage, exc, EXIT_FAIL)
    return EXIT_OK


def _fail(stage, exc, code):
    print(f"dfframe {stage}: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
