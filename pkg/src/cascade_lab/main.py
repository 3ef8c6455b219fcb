"""
Command-line entry point for cascade-lab.

This module handles:
1. Loading a config (or model defaults) and applying flag overrides
2. Running one model, or a sweep of runs, through the RunEngine
3. Running the acceptance suite (``verify``)
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from cascade_lab.core.config_loader import (
    apply_overrides,
    build_config,
    load_config,
    parse_override,
)
from cascade_lab.core.errors import CascadeLabError, ConfigValidationError
from cascade_lab.core.run_engine import RunEngine
from cascade_lab.core.verification_suite import run_verification
from cascade_lab.models.config_models import ModelKind, SimConfig
from cascade_lab.models.run_result import RunManifest

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_VERIFY = 3

MODEL_HELP = {
    ModelKind.GOY: "Integrate the GOY shell model and fit its inertial range",
    ModelKind.FINANCE: "Relax the finance shell cascade and fit n(W)",
    ModelKind.EQUILIBRIUM: "Run the kinetic wealth-exchange baseline",
    ModelKind.PAO: "Tabulate the Kolmogorov and Pao closed forms",
    ModelKind.TREE: "Allocate a budget down a fiscal tree",
}

logger = logging.getLogger("cascade_lab")


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the config-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(
        prog="cascade-lab",
        description="Multiscale cascade laboratory: shell models, closures and wealth cascades",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Default GOY run with plot script
  cascade-lab goy --config configs/goy.toml --emit-plots

  # Pareto exponent over several couplings
  cascade-lab finance --sweep finance.alpha=-1,-0.5,0,1 --out output/chain

  # Acceptance suite
  cascade-lab verify --quick
        """,
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    for kind in ModelKind:
        sub = subparsers.add_parser(kind.value, help=MODEL_HELP[kind])
        sub.add_argument("--config", type=str, metavar="PATH", help="TOML config file")
        sub.add_argument("--out", type=str, metavar="DIR", help="Output directory")
        sub.add_argument("--seed", type=int, metavar="N", help="RNG seed override")
        sub.add_argument(
            "--sweep",
            action="append",
            default=[],
            metavar="KEY=v1,v2,...",
            help="Run the cartesian product of values (repeatable)",
        )
        sub.add_argument(
            "--emit-plots", action="store_true", help="Write a gnuplot script next to the CSVs"
        )
        sub.add_argument("--verbose", action="store_true", help="Debug logging")

    verify = subparsers.add_parser("verify", help="Run the acceptance suite")
    verify.add_argument("--out", type=str, default="output/verify", metavar="DIR")
    verify.add_argument("--quick", action="store_true", help="Shortened runs for CI")
    verify.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def resolve_config(args: argparse.Namespace) -> SimConfig:
    """Config from --config (or model defaults) with flag overrides applied."""
    model = ModelKind(args.command)
    cfg = load_config(args.config) if args.config else build_config(model)
    if cfg.model != model:
        raise ConfigValidationError(
            "Invalid config",
            [f"params/model mismatch: command is {model.value} but config is for {cfg.model.value}"],
        )
    overrides: Dict[str, object] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out:
        overrides["output.directory"] = args.out
    if args.emit_plots:
        overrides["output.emit_plots"] = True
    return apply_overrides(cfg, overrides) if overrides else cfg


def print_manifest(manifest: RunManifest) -> None:
    print("=" * 60)
    print(f"MODEL: {manifest.model}  (seed {manifest.seed})")
    print("=" * 60)
    print(f"  Status: {manifest.status.value}")
    print(f"  Output: {manifest.output_dir}")
    print(f"  Files: {', '.join(manifest.generated_files)}")
    for warning in manifest.warnings:
        print(f"  Warning: {warning}")


def run_model(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    engine = RunEngine()
    if not args.sweep:
        manifest, outputs = engine.run(cfg)
        print_manifest(manifest)
        for name, fit in outputs.fits.items():
            print(f"  {name}: slope {fit.slope:.6g} (r2 {fit.r_squared:.4f}, {fit.n_points} points)")
        return EXIT_OK

    sweep: Dict[str, List[object]] = {}
    for text in args.sweep:
        key, values = parse_override(text)
        sweep[key] = values
    sweep_manifest, manifests = engine.run_sweep(cfg, sweep)
    print_manifest(sweep_manifest)
    print(f"  Runs: {len(manifests)} succeeded, {len(sweep_manifest.errors)} failed")
    for issue in sweep_manifest.errors:
        print(f"  Failed {issue.stage}: {issue.error}", file=sys.stderr)
    return EXIT_RUNTIME if sweep_manifest.errors else EXIT_OK


def run_verify(args: argparse.Namespace) -> int:
    passed, results = run_verification(Path(args.out), quick=args.quick)
    print("=" * 60)
    print(f"VERIFY{' (quick)' if args.quick else ''}")
    print("=" * 60)
    for result in results:
        mark = "PASS" if result.passed else "FAIL"
        print(f"  [{mark}] {result.name}: {result.detail} ({result.seconds:.1f}s)")
    print(f"\n  Report: {Path(args.out) / 'verify_report.json'}")
    return EXIT_OK if passed else EXIT_VERIFY


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the cascade-lab CLI command."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        if args.command == "verify":
            return run_verify(args)
        return run_model(args)
    except ConfigValidationError as e:
        print(f"cascade-lab: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CascadeLabError as e:
        print(f"cascade-lab: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
