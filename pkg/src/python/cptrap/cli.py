"""
CPTrap - Command Line Interface

    python -m cptrap [--config FILE] [--output PATH] [--format csv|json] [-v] SUBCOMMAND ...

Subcommands: sus, evolve, stationary, family, beats, sweep, selftest.
Flags given on the command line are merged into the run document before
validation, so they obey the same schema as the config file.

Exit codes: 0 ok, 2 schema/usage, 3 physics domain, 4 regime, 5 numerical.
"""

import argparse
import json
import logging
import os
import sys
import time
from typing import Any, Dict, List, Optional

import numpy as np

from cptrap import metrics
from cptrap.bath import build_susceptivity_set, einstein_ratio
from cptrap.config import RunConfig, load_document, parse_config
from cptrap.errors import CPTrapError, NumericalError, RegimeError, SchemaError, UsageError
from cptrap.generator import TRAJECTORY_COLUMNS, build_generator, evolve_rk, sample_exact
from cptrap.results import (
    FAMILY_COLUMNS,
    beats_document,
    csv_text,
    family_rows,
    json_text,
    result_document,
    stationary_document,
    susceptivity_document,
    table_document,
    trajectory_csv,
)
from cptrap.run_logger import RunLogger
from cptrap.selftest import run_selftest
from cptrap.stationary import admissible_interval, beats, solve_nullspace
from cptrap.sweep import run_sweep

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("sus", "evolve", "stationary", "family", "beats", "sweep", "selftest")


# =============================================================================
# Argument parsing
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cptrap",
        description="Stochastic-limit dynamics and population trapping of a Lambda atom",
    )
    parser.add_argument("--config", help="JSON run document (defaults apply when omitted)")
    parser.add_argument("--output", help="output path (relative paths resolve under CPTRAP_OUTPUT_DIR)")
    parser.add_argument("--format", choices=("csv", "json"), help="format of tabular output")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sub.add_parser("sus", help="bath susceptivities as JSON")

    evolve = sub.add_parser("evolve", help="trajectory CSV of the master equation")
    evolve.add_argument("--initial-state", help="JSON file: preset name or 9 real coordinates")
    evolve.add_argument("--horizon", type=float)
    evolve.add_argument("--dt", type=float)
    evolve.add_argument("--samples", type=int)
    evolve.add_argument("--exact", action="store_true", help="sample with the exact propagator")

    sub.add_parser("stationary", help="classify the stationary set")

    family = sub.add_parser("family", help="tabulate the stationary family over s")
    family.add_argument("--ratio", type=float, help="Einstein ratio R (default: from the bath)")
    family.add_argument("--points", type=int)

    beat = sub.add_parser("beats", help="quantum-beat descriptor and verification trajectory")
    beat.add_argument("--initial-state", help="JSON file: preset name or 9 real coordinates")

    sweep = sub.add_parser("sweep", help="one row per grid point")
    sweep.add_argument("--parameter", choices=("s", "N", "beta", "omega"))
    sweep.add_argument("--grid", help="comma-separated grid values")
    sweep.add_argument("--workers", type=int)

    selftest = sub.add_parser("selftest", help="run the acceptance suites")
    selftest.add_argument("--seed", type=int)
    selftest.add_argument("--quick", action="store_true", help="at most 3 instances per suite")
    selftest.add_argument("--suite", action="append", help="run only the named suite (repeatable)")

    return parser


def _read_initial_state(path: str) -> Any:
    document = load_document(path)
    if isinstance(document, dict):
        if set(document) != {"initial_state"}:
            raise SchemaError("initial_state", f"{path} must hold a preset name, 9 coordinates, or {{\"initial_state\": ...}}")
        return document["initial_state"]
    return document


def _parse_grid(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise SchemaError("sweep.grid", f"not a comma-separated list of numbers: {text!r}")


def merge_arguments(document: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    """Fold command-line flags into the run document."""
    doc = json.loads(json.dumps(document)) if document else {}
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "expected an object")

    def section(name):
        value = doc.get(name)
        if value is None:
            value = doc[name] = {}
        if not isinstance(value, dict):
            raise SchemaError(name, "expected an object")
        return value

    if args.output is not None:
        section("output")["path"] = args.output
    if args.format is not None:
        section("output")["format"] = args.format

    for flag in ("horizon", "dt", "samples", "workers"):
        value = getattr(args, flag, None)
        if value is not None:
            section("numerics")[flag] = value
    if getattr(args, "exact", False):
        section("numerics")["exact"] = True
    if getattr(args, "initial_state", None):
        doc["initial_state"] = _read_initial_state(args.initial_state)
    if getattr(args, "ratio", None) is not None:
        section("family")["ratio"] = args.ratio
    if getattr(args, "points", None) is not None:
        section("family")["points"] = args.points
    if getattr(args, "parameter", None) is not None or getattr(args, "grid", None) is not None:
        sweep = section("sweep")
        if args.parameter is not None:
            sweep["parameter"] = args.parameter
        if args.grid is not None:
            sweep["grid"] = _parse_grid(args.grid)
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    return doc


# =============================================================================
# Output
# =============================================================================

def emit(text: str, config: RunConfig, suffix: Optional[str] = None):
    """Write to the configured output path (with an optional suffix) or stdout."""
    path = config.output.resolved_path()
    if path is None:
        if suffix is None:
            sys.stdout.write(text)
        return
    if suffix is not None:
        stem, _ = os.path.splitext(path)
        path = stem + suffix
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info(f"Wrote {path}")


def emit_table(name: str, columns, rows, config: RunConfig):
    rows = list(rows)
    if config.output.format == "json":
        emit(json_text(table_document(name, columns, rows)), config)
    else:
        emit(csv_text(columns, rows), config)


def _family_ratio(config: RunConfig) -> float:
    if config.family.ratio is not None:
        return config.family.ratio
    return einstein_ratio(build_susceptivity_set(config.bath))


# =============================================================================
# Subcommands
# =============================================================================

@metrics.track_latency("sus")
def run_sus(config: RunConfig, args) -> int:
    emit(json_text(susceptivity_document(build_susceptivity_set(config.bath))), config)
    return 0


@metrics.track_latency("evolve")
def run_evolve(config: RunConfig, args) -> int:
    L = build_generator(build_susceptivity_set(config.bath))
    n = config.numerics
    if n.exact:
        times = np.linspace(0.0, n.horizon, n.samples + 1) if n.horizon > 0 else np.zeros(1)
        trajectory = sample_exact(L, config.initial_state, times)
    else:
        trajectory = evolve_rk(L, config.initial_state, n.horizon, n.dt, n.samples)
    emit_table("trajectory", TRAJECTORY_COLUMNS, trajectory.rows(), config)
    return 0


@metrics.track_latency("stationary")
def run_stationary(config: RunConfig, args) -> int:
    result = solve_nullspace(build_generator(build_susceptivity_set(config.bath)))
    emit(json_text(stationary_document(result)), config)
    return 0


@metrics.track_latency("family")
def run_family(config: RunConfig, args) -> int:
    R = _family_ratio(config)
    s_min, s_max = admissible_interval(R)
    grid = np.linspace(s_min, s_max, config.family.points)
    emit_table("family", FAMILY_COLUMNS, family_rows(R, grid), config)
    return 0


@metrics.track_latency("beats")
def run_beats(config: RunConfig, args) -> int:
    descriptor = beats(build_susceptivity_set(config.bath), config.initial_state)
    if descriptor.frequency == 0.0 and config.numerics.require_oscillation:
        raise RegimeError(
            "Im(g|g)^+ = 0: no beats (set numerics.require_oscillation = false to accept a static D)",
            {"frequency": 0.0},
        )
    if config.output.resolved_path() is None:
        # stdout carries one document, so the trajectory rides inside it
        emit(json_text(beats_document(descriptor, include_trajectory=True)), config)
        return 0
    emit(json_text(beats_document(descriptor)), config)
    emit(trajectory_csv(descriptor.trajectory), config, suffix=".trajectory.csv")
    return 0


@metrics.track_latency("sweep")
def run_sweep_command(config: RunConfig, args) -> int:
    if config.sweep is None:
        raise UsageError("sweep needs a sweep section (or --parameter and --grid)")
    ratio = _family_ratio(config) if config.sweep.parameter == "s" else None
    columns, rows = run_sweep(config, config.sweep.parameter, config.sweep.grid, ratio)
    emit_table(f"sweep_{config.sweep.parameter}", columns, rows, config)
    return 0


@metrics.track_latency("selftest")
def run_selftest_command(config: RunConfig, args) -> int:
    report = run_selftest(config.seed, quick=getattr(args, "quick", False), only=getattr(args, "suite", None))
    emit(json_text(result_document("selftest", report)), config)
    events = RunLogger()
    events.log(
        "selftest_report",
        seed=report["seed"],
        passed=report["passed"],
        failed=report["failed"],
        failed_suites=[entry["name"] for entry in report["suites"] if not entry["passed"]],
    )
    events.close()
    if report["failed"]:
        logger.error(f"Self-test: {report['failed']} of {report['passed'] + report['failed']} suites failed")
        return NumericalError.exit_code
    return 0


HANDLERS = {
    "sus": run_sus,
    "evolve": run_evolve,
    "stationary": run_stationary,
    "family": run_family,
    "beats": run_beats,
    "sweep": run_sweep_command,
    "selftest": run_selftest_command,
}


def run(subcommand: str, config: RunConfig, args: Optional[argparse.Namespace] = None) -> int:
    if subcommand not in HANDLERS:
        raise UsageError(f"unknown subcommand {subcommand!r}")
    return HANDLERS[subcommand](config, args)


# =============================================================================
# Entry point
# =============================================================================

def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    events = RunLogger()
    started = time.monotonic()
    digest = None
    try:
        config = parse_config(merge_arguments(load_document(args.config), args))
        digest = config.digest
        code = run(args.subcommand, config, args)
    except CPTrapError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"cptrap: error: {e}", file=sys.stderr)
        events.error(
            "run_failed",
            subcommand=args.subcommand,
            config_digest=digest,
            error=type(e).__name__,
            message=str(e),
            exit_code=e.exit_code,
        )
        code = e.exit_code
    else:
        events.log(
            "run_completed",
            subcommand=args.subcommand,
            config_digest=digest,
            exit_code=code,
            duration_s=round(time.monotonic() - started, 6),
        )
    finally:
        events.close()

    gateway = os.environ.get("CPTRAP_PUSHGATEWAY")
    if gateway:
        metrics.push_metrics(gateway)
    return code
