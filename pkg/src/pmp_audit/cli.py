"""``pmp-audit`` command line: run sweeps, run property suites, print attack ceilings."""
from __future__ import annotations

import argparse
import logging
import math
import sys

from .core import mia_success_bound, pmp_to_mip_eta

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_USAGE = 2
EXIT_CALIBRATION = 3


def _cmd_run(args) -> int:
    from .experiments import ExperimentConfig, run_experiment

    try:
        cfg = ExperimentConfig.from_json(args.config)
    except (OSError, ValueError, TypeError) as exc:
        print(f"pmp-audit run: bad config {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or cfg.output_path or "-"
    outcome = run_experiment(cfg, None if out == "-" else out, deterministic=args.deterministic)
    if out == "-":
        from .experiments import render_csv

        sys.stdout.write(render_csv(cfg, outcome.rows, args.deterministic))
    else:
        print(f"wrote {len(outcome.rows)} rows to {outcome.path}", file=sys.stderr)
    if outcome.exceeded:
        print(f"pmp-audit run: {outcome.failures}/{len(outcome.rows)} rows failed calibration",
              file=sys.stderr)
        return EXIT_CALIBRATION
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import run_suite

    results = run_suite(args.suite)
    return EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY


def _cmd_mia_bound(args) -> int:
    eps = args.eps
    if math.isnan(eps) or eps < 0:
        print("pmp-audit mia-bound: eps must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    print(f"eps={eps:.12g}")
    print(f"ceiling={mia_success_bound(eps):.12g}")
    print(f"eta={pmp_to_mip_eta(eps):.12g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from .verify import SUITE_NAMES

    parser = argparse.ArgumentParser(prog="pmp-audit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log calibration warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config and write its CSV")
    run.add_argument("config")
    run.add_argument("--deterministic", action="store_true", help="omit the timestamp comment line")
    run.add_argument("--out", help="output path, '-' for stdout (default: the config's output_path)")
    run.set_defaults(func=_cmd_run)

    ver = sub.add_parser("verify", help="run a property suite")
    ver.add_argument("suite", choices=SUITE_NAMES)
    ver.set_defaults(func=_cmd_verify)

    mb = sub.add_parser("mia-bound", help="success ceiling of a practical membership attack")
    mb.add_argument("eps", type=float)
    mb.set_defaults(func=_cmd_mia_bound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    # negative numbers would otherwise be parsed as options
    argv = list(sys.argv[1:] if argv is None else argv)
    if len(argv) >= 2 and argv[0] == "mia-bound" and argv[1].startswith("-"):
        argv.insert(1, "--")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
