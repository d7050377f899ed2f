"""Command line entry point: ``resonance-lab run|validate|selftest``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import InvalidInputError
from .scenario import load_scenario

EXIT_OK, EXIT_FINDINGS, EXIT_INVALID = 0, 1, 2


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("RESONANCE_LAB_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="resonance-lab",
                                description="Coupling resonance experiments from JSON scenarios.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and write its report")
    run.add_argument("scenario")
    run.add_argument("--out", default=".", help="output directory (default: current)")
    run.add_argument("--seed", type=_nonneg, default=None, help="override the scenario seed")
    run.add_argument("--threads", type=_positive, default=None)
    val = sub.add_parser("validate", help="check a scenario file without running it")
    val.add_argument("scenario")
    sub.add_parser("selftest", help="run quick built-in invariant checks")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "selftest":
        from .selftest import run_selftest
        return EXIT_OK if run_selftest() else EXIT_FINDINGS

    try:
        sc = load_scenario(args.scenario)
    except OSError as exc:
        print(f"error: cannot read {args.scenario}: {exc.strerror}", file=sys.stderr)
        return EXIT_INVALID
    except InvalidInputError as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if args.command == "validate":
        try:
            sc.build_models()
        except InvalidInputError as exc:
            print(f"error: {args.scenario}: model: {exc}", file=sys.stderr)
            return EXIT_INVALID
        print(f"ok: {sc.kind} on {sc.model['kind']} (repeat {sc.repeat})")
        return EXIT_OK

    from .runner import run_scenario, write_outputs
    try:
        result = run_scenario(sc, threads=_threads(args.threads), seed=args.seed)
    except InvalidInputError as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for path in write_outputs(sc, result, args.out):
        print(path)
    for run in result.report["runs"]:
        for c in run["checks"]:
            if not c["passed"]:
                print(f"FAIL {c['name']}", file=sys.stderr)
        for e in run["errors"]:
            print(f"ERROR {e.get('error')}: {e.get('message')}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
