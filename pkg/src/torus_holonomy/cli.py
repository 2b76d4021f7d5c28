"""Command-line interface.

Subcommands: spectrum | classical | evolve | holonomy | verify.
Exit codes: 0 ok, 2 config error, 3 precondition error, 4 verification
failure.  Outputs are written atomically; a failing run leaves no partial
files.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ExperimentConfig, load_config
from .errors import (
    ConfigError,
    DimensionMismatchError,
    OpenCurveError,
    SplitViolationError,
    TorusHolonomyError,
)
from . import harness
from .serialize import atomic_write_json, atomic_write_text

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_VERIFY = 4


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torus-holonomy",
        description="Simulate and verify controlled integrable torus dynamics.",
    )
    parser.add_argument("--config", help="path to a JSON experiment config")
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--steps", type=int, help="override run.steps from the config")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    parser.add_argument(
        "command",
        choices=["spectrum", "classical", "evolve", "holonomy", "verify"],
        help="what to run",
    )
    return parser


def _load(args) -> ExperimentConfig:
    from dataclasses import replace

    if not args.config:
        raise ConfigError("--config is required for this command")
    config = load_config(args.config)
    if args.steps is not None:
        if args.steps < 1:
            raise ConfigError("--steps must be >= 1")
        config = replace(config, run=replace(config.run, steps=args.steps))
    return config


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out = args.out
    try:
        if args.command == "verify":
            config = _load(args) if args.config else None
            payload = harness.run_verify(config)
            path = os.path.join(out, "verify.json")
            atomic_write_json(path, payload)
            for check in payload["checks"]:
                _say(
                    args,
                    f"{'PASS' if check['passed'] else 'FAIL'} {check['name']}: "
                    f"{check['measured']:.3e} {check['comparison']} {check['tolerance']:.3e}",
                )
            _say(args, f"wrote {path}")
            return EXIT_OK if payload["passed"] else EXIT_VERIFY

        config = _load(args)
        if args.command == "spectrum":
            payload = harness.run_spectrum(config)
            path = os.path.join(out, "spectrum.json")
            atomic_write_json(path, payload)
            _say(args, f"wrote {path} ({len(payload['levels'])} levels)")
        elif args.command == "classical":
            text = harness.run_classical(config)
            path = os.path.join(out, "trajectory.csv")
            atomic_write_text(path, text)
            _say(args, f"wrote {path}")
        elif args.command == "holonomy":
            matrix, diagnostics = harness.run_holonomy(config)
            path = os.path.join(out, "holonomy.json")
            diag_path = os.path.join(out, "holonomy_diagnostics.json")
            atomic_write_json(path, matrix)
            atomic_write_json(diag_path, diagnostics)
            _say(args, f"wrote {path} and {diag_path}")
        elif args.command == "evolve":
            matrix, diagnostics = harness.run_evolve(config)
            path = os.path.join(out, "evolution.json")
            diag_path = os.path.join(out, "evolution_diagnostics.json")
            atomic_write_json(path, matrix)
            atomic_write_json(diag_path, diagnostics)
            _say(args, f"wrote {path} and {diag_path}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OpenCurveError, SplitViolationError, DimensionMismatchError) as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except TorusHolonomyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
