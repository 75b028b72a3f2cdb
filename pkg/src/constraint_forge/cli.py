"""``constraint-forge`` command line: run one verification pipeline on one model file."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Sequence

from .dsl import ModelSyntaxError, load_model, parse_model
from .lattice import LatticeConfigurationError
from .models import FieldModel
from .pipeline import COMMANDS, Options, engine_version, run_command

SEED_ENV = "CONSTRAINT_FORGE_SEED"
EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fixture_names() -> list[str]:
    root = resources.files("constraint_forge") / "fixtures"
    return sorted(p.name[:-len(".model")] for p in root.iterdir() if p.name.endswith(".model"))


def resolve_model(ref: str) -> FieldModel:
    """Load ``ref`` as a file path, or else as the name of a shipped fixture."""
    path = Path(ref)
    if path.is_file():
        return load_model(path)
    name = ref[:-len(".model")] if ref.endswith(".model") else ref
    if name in fixture_names():
        text = (resources.files("constraint_forge") / "fixtures" / f"{name}.model").read_text(encoding="utf-8")
        return parse_model(text)
    raise UsageError(f"no model file or shipped fixture named {ref!r}")


def _spacing(text: str) -> Fraction:
    try:
        h = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid spacing {text!r}")
    if h <= 0:
        raise argparse.ArgumentTypeError("spacing must be positive")
    return h


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="constraint-forge", description="Check gauge identities, constraint derivations and "
                                                      "classifications for models written in the model DSL.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("model", help="path to a .model file or the name of a shipped fixture")
    p.add_argument("--ideal-depth", type=int, choices=(0, 1, 2), help="jet depth of the vacuum ideal")
    p.add_argument("--grid", type=_positive, help="sites per axis of the (coarse) lattice")
    p.add_argument("--spacing", type=_spacing, help="lattice spacing h, e.g. 1 or 1/2")
    p.add_argument("--seeds", type=_positive, default=5, help="number of random configurations (default 5)")
    p.add_argument("--format", choices=("human", "machine"), default="human")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--metadata", help="write run metadata (timing, arguments) to this JSON sidecar")
    return p


def _base_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}")


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.time()
    try:
        args = build_parser().parse_args(argv)
        opts = Options(args.ideal_depth, args.grid, args.spacing, args.seeds, _base_seed())
        model = resolve_model(args.model)
        report = run_command(args.command, model, opts)
    except UsageError as exc:
        print(f"constraint-forge: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelSyntaxError as exc:
        print(f"constraint-forge: {exc.category} error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LatticeConfigurationError as exc:
        print(f"constraint-forge: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = report.machine() if args.format == "machine" else report.human()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if report.exit_code and args.format == "human":
        failing = [c.name for c in report.checks if c.status == "fail"]
        print("failing checks: " + "; ".join(failing), file=sys.stderr)
    if args.metadata:
        meta = {"argv": argv, "engine_version": engine_version(), "started": started,
                "elapsed_seconds": round(time.time() - started, 3), "exit_code": report.exit_code,
                "python": sys.version.split()[0]}
        Path(args.metadata).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
