"""Command-line driver.

    gaugeqmt sweep --config run.toml [--output out.csv]
    gaugeqmt compare --B 1 --g 0,0.5,1 [--m 0]
    gaugeqmt convergence --config run.toml
    gaugeqmt models

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ModelConfig, RunConfig, SweepConfig, load_config
from .errors import ConfigError, QMTError
from .sweep import MODELS, format_convergence, rows_to_csv, run_convergence, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; usage errors are status 1 here
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gaugeqmt", description="Quantum metric tensors and their gauge (in)dependence.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="run a parameter sweep from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="CSV path (overrides [output].path)")

    p = sub.add_parser("compare", help="compare naive and covariant metrics across gauges")
    p.add_argument("--B", type=float, required=True, dest="B")
    p.add_argument("--g", type=_float_list, required=True, help="comma-separated gauge values")
    p.add_argument("--m", type=int, default=0)

    p = sub.add_parser("convergence", help="grid and finite-difference convergence study")
    p.add_argument("--config", required=True)
    p.add_argument("--json", action="store_true", help="print the report as JSON")

    sub.add_parser("models", help="list built-in models")
    return parser


def _sweep(args) -> int:
    config = load_config(args.config)
    result = run_sweep(config, args.output)
    if config.output.path is None and args.output is None and result.status == 0:
        sys.stdout.write(rows_to_csv(result.rows))
    if result.status:
        print(f"numerical failure: {result.message}", file=sys.stderr)
    return result.status


def _compare(args) -> int:
    if not args.g:
        raise ConfigError("--g: gauge list must not be empty")
    if not args.B > 0:
        raise ConfigError("--B: must be positive")
    if args.m < 0:
        raise ConfigError("--m: must be >= 0")
    config = RunConfig(
        model=ModelConfig(name="landau", m=args.m, g=tuple(args.g)),
        sweep=SweepConfig(param="B", start=args.B, stop=args.B, points=1),
    )
    result = run_sweep(config)
    if result.status:
        print(f"numerical failure: {result.message}", file=sys.stderr)
    else:
        sys.stdout.write(rows_to_csv(result.rows))
    return result.status


def _convergence(args) -> int:
    config = load_config(args.config)
    result = run_convergence(config)
    if args.json:
        print(json.dumps(result.diagnostics, indent=2, default=str))
    else:
        sys.stdout.write(format_convergence(result.diagnostics))
    if result.status:
        print(result.message, file=sys.stderr)
    return result.status


def _models(args) -> int:
    for name, description in MODELS.items():
        print(f"{name:8s} {description}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    handler = {"sweep": _sweep, "compare": _compare, "convergence": _convergence, "models": _models}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QMTError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
