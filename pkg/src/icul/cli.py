"""Command line entry points.

    icul ingest        --config cfg.toml --run-dir runs/
    icul train-shadows --config cfg.toml --run-dir runs/
    icul unlearn       --config cfg.toml --run-dir runs/ [--method icul_L6]
    icul audit         --config cfg.toml --run-dir runs/ [--method icul_L6]
    icul report        --config cfg.toml --run-dir runs/

Each verb accepts --seed and --backend overrides. On failure the exit code
is nonzero and stderr carries one JSON line {"category": ..., "message": ...}.
"""

import argparse
import json
import sys

from .config import load_config
from .errors import IculError
from .pipeline import (
    cmd_audit,
    cmd_ingest,
    cmd_report,
    cmd_train_shadows,
    cmd_unlearn,
    run_directory,
)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icul",
        description="in-context unlearning pipeline with a "
                    "likelihood-ratio unlearning audit",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("ingest", "train-shadows", "unlearn", "audit", "report"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--run-dir", required=True, help="directory for run outputs")
        p.add_argument("--seed", type=int, default=None, help="override run seed")
        p.add_argument("--backend", choices=("toy", "remote"), default=None)
        if verb in ("unlearn", "audit"):
            p.add_argument("--method", default=None,
                           help="single method tag (default: all configured)")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_config(args.config, seed_override=args.seed,
                             backend_override=args.backend)
        if args.verb == "ingest":
            root = cmd_ingest(config, args.run_dir)
        elif args.verb == "train-shadows":
            root = cmd_train_shadows(config, args.run_dir)
        elif args.verb == "unlearn":
            root = cmd_unlearn(config, args.run_dir, method=args.method)
        elif args.verb == "audit":
            root = cmd_audit(config, args.run_dir, method=args.method)
        else:
            root = cmd_report(config, args.run_dir)
    except IculError as exc:
        print(json.dumps({"category": exc.category, "message": str(exc)}),
              file=sys.stderr)
        return 1
    print(f"{args.verb}: ok ({root})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
