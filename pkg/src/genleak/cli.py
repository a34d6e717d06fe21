"""Command-line entry point: genleak run / resume / report."""
from __future__ import annotations

import argparse
import json
import sys

from .experiments import (
    ChecksumError,
    ConfigError,
    IncompleteRunError,
    report,
    resume,
    run_experiment,
)
from .models import TrainingDivergedError

EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genleak",
        description="Membership-privacy experiments on small generative models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config from scratch")
    run_p.add_argument("--config", required=True, help="experiment config JSON")
    run_p.add_argument("--out", default=None, help="override the output directory")
    run_p.add_argument("--threads", type=int, default=None,
                       help="attack parallelism (results are identical at any value)")
    run_p.add_argument("--seed-override", type=int, default=None,
                       help="replace the config's master seed")

    resume_p = sub.add_parser("resume", help="recompute missing stages of a run")
    resume_p.add_argument("--manifest", required=True, help="manifest JSON of the run")
    resume_p.add_argument("--threads", type=int, default=None)

    report_p = sub.add_parser("report", help="consolidate a completed run")
    report_p.add_argument("--manifest", required=True, help="manifest JSON of the run")
    report_p.add_argument("--out", default=None, help="directory for report files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            manifest = run_experiment(
                args.config,
                threads=args.threads,
                seed_override=args.seed_override,
                out_override=args.out,
            )
            print(f"run complete: {manifest.path}")
        elif args.command == "resume":
            manifest = resume(args.manifest, threads=args.threads)
            print(f"resume complete: {manifest.path}")
        else:
            payload = report(args.manifest, out_dir=args.out)
            print(json.dumps(payload["auc_grid"], indent=2))
    except (ConfigError, IncompleteRunError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except TrainingDivergedError as e:
        print(f"error: training diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (OSError, ChecksumError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
