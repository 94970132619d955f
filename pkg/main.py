#!/usr/bin/env python3
"""Command-line entry point for the steady-state coherence analysis."""

import argparse
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from src.bath import BathSpec
from src.config import Config
from src.dynamics import (
    TRAJECTORY_COLUMNS, CoefficientCache, evolve, find_positivity_violation, trajectory_summary,
)
from src.errors import InvalidParameterError, SSCError
from src.logger import setup_logging, AnalysisLogger
from src.positivity import gks_decompose
from src.redfield import GeneratorMode, SystemSpec, generator_for
from src.results import ResultWriter, SweepResult
from src.selftest import run_selftest
from src.steady import v1_closed_form
from src.sweeps import SweepOrchestrator, evaluate_point, make_point

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_INPUT = 2
EXIT_NUMERICAL = 3

VERBS = ["steady", "sweep-lambda", "sweep-temp", "dynamics", "kossakowski",
         "optimize-f", "scan-divergence", "selftest"]

# flag -> dotted config path
OVERRIDES = {
    "lam": "bath.lambda",
    "s": "bath.s",
    "cutoff": "bath.cutoff",
    "temp": "bath.temperature",
    "f1": "system.f1",
    "f2": "system.f2",
    "mode": "system.mode",
    "workers": "sweep.workers",
    "out": "output.path",
    "format": "output.format",
    "log_level": "logging.level",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Steady-state coherence of non-secular Bloch-Redfield dynamics")
    parser.add_argument("verb", choices=VERBS, help="Analysis to run")
    parser.add_argument("--config", default="config.yaml", help="Path to configuration file")
    parser.add_argument("--lambda", dest="lam", type=float, help="Coupling scale lambda")
    parser.add_argument("--s", type=float, help="Ohmicity exponent")
    parser.add_argument("--cutoff", type=float, help="Bath cutoff in units of omega0")
    parser.add_argument("--temp", type=float, help="Temperature in units of omega0")
    parser.add_argument("--f1", type=float, help="sigma_x coupling weight")
    parser.add_argument("--f2", type=float, help="sigma_z coupling weight")
    parser.add_argument("--mode", choices=[m.value for m in GeneratorMode],
                        help="Generator: full Redfield, counter-rotating pairs dropped, or Davies")
    parser.add_argument("--out", help="Output path (stdout when omitted)")
    parser.add_argument("--format", choices=["csv", "json"], help="Output format")
    parser.add_argument("--workers", type=int, help="Worker processes for sweeps")
    parser.add_argument("--log-level", help="Logging level")
    parser.add_argument("--fmax", type=float, help="Box size for optimize-f")
    parser.add_argument("--v0", type=float, nargs=3, default=[0.0, 0.0, 1.0],
                        help="Initial Bloch vector for dynamics")
    parser.add_argument("--t-end", type=float, help="Final time for dynamics")
    parser.add_argument("--samples", type=int, default=201, help="Trajectory samples")
    parser.add_argument("--scan", action="store_true",
                        help="Scan pure initial states for a Bloch-ball exit")
    parser.add_argument("--corrupt-gamma-zero", type=float, nargs="?", const=2.0, default=1.0,
                        help="Selftest hook: scale the dephasing rate seen by the gamma_zero check")
    return parser


def main(argv: List[str] = None) -> int:
    """Main application entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)

    config = Config(args.config)
    for flag, path in OVERRIDES.items():
        config.set(path, getattr(args, flag))

    setup_logging(config)
    logger = AnalysisLogger("main")
    logger.info("Starting analysis", verb=args.verb)

    try:
        return dispatch(args, config)
    except KeyboardInterrupt:
        logger.info("Analysis interrupted by user")
        return EXIT_FAILURE
    except InvalidParameterError as e:
        logger.log_error_with_context(e, {"operation": args.verb})
        return EXIT_BAD_INPUT
    except SSCError as e:
        logger.log_error_with_context(e, {"operation": args.verb})
        return EXIT_NUMERICAL


def dispatch(args: argparse.Namespace, config: Config) -> int:
    writer = ResultWriter(config.snapshot)
    output = {"path": config.output_path, "fmt": config.output_format}
    if args.verb == "selftest":
        return run_selftest_verb(args, config)
    if args.verb == "steady":
        write_steady(config, writer, output)
    elif args.verb == "kossakowski":
        write_kossakowski(config, writer, output)
    elif args.verb == "dynamics":
        write_dynamics(args, config, writer, output)
    elif args.verb == "scan-divergence":
        write_divergence(config, writer, output)
    else:
        orchestrator = SweepOrchestrator(config)
        if args.verb == "sweep-lambda":
            result = orchestrator.sweep_lambda()
        elif args.verb == "sweep-temp":
            result = orchestrator.sweep_temperature()
        else:
            result = orchestrator.optimize_f(args.fmax)
        writer.write(result, **output)
    return EXIT_OK


def _specs(config: Config):
    bath = BathSpec(config.coupling, config.ohmicity, config.cutoff, config.temperature)
    system = SystemSpec(config.f1, config.f2, config.omega0)
    return system, bath, GeneratorMode(config.mode)


def write_steady(config: Config, writer: ResultWriter, output: Dict[str, Any]) -> None:
    record = evaluate_point(make_point(config))
    system, bath, _ = _specs(config)
    metadata: Dict[str, Any] = {}
    try:
        closed = v1_closed_form(system, bath)
        metadata["closed_form_v1"] = closed.v1
        metadata["closed_form_flags"] = list(closed.flags)
    except SSCError as e:
        metadata["closed_form_v1"] = type(e).__name__
    writer.write(SweepResult("steady", [record], metadata), **output)


def write_kossakowski(config: Config, writer: ResultWriter, output: Dict[str, Any]) -> None:
    system, bath, mode = _specs(config)
    data = gks_decompose(generator_for(system, bath, mode))
    rows = [{"k": k + 1, "l": l + 1, "re": float(data.A[k, l].real),
             "im": float(data.A[k, l].imag)} for k in range(3) for l in range(3)]
    metadata = {
        "eigenvalues": data.eigenvalues.tolist(),
        "negativity_k": data.negativity,
        "lamb_hamiltonian_re": data.lamb_hamiltonian.real.tolist(),
        "lamb_hamiltonian_im": data.lamb_hamiltonian.imag.tolist(),
        "parameters": make_point(config),
    }
    writer.write_rows("kossakowski", rows, ["k", "l", "re", "im"], metadata, **output)


def write_dynamics(args: argparse.Namespace, config: Config, writer: ResultWriter,
                   output: Dict[str, Any]) -> None:
    system, bath, mode = _specs(config)
    settings = config.dynamics_settings
    if args.scan:
        report = find_positivity_violation(
            system, bath, mode,
            theta_points=int(settings["scan_theta_points"]),
            phi_points=int(settings["scan_phi_points"]),
            t_end=args.t_end or float(settings["scan_t_end"]),
            threshold=float(settings["violation_threshold"]))
        row = dict(vars(report), result=type(report).__name__)
        writer.write_rows("positivity-scan", [row], list(row), make_point(config), **output)
        return

    cache = None
    if mode is not GeneratorMode.SECULAR:
        cache = CoefficientCache(bath, system.omega0, float(settings["cache_t_min"]),
                                 float(settings["cache_t_max"]),
                                 int(settings["points_per_decade"]))
    t_end = args.t_end or settings.get("t_end") or _default_t_end(system, bath, mode, cache)
    trajectory = evolve(system, bath, mode, np.array(args.v0), float(t_end),
                        samples=args.samples, rtol=float(settings["rtol"]),
                        atol=float(settings["atol"]), cache=cache,
                        threshold=float(settings["violation_threshold"]))
    frame = trajectory.to_frame()
    metadata = {"parameters": make_point(config), "v0": list(args.v0),
                **trajectory_summary(trajectory)}
    writer.write_rows("dynamics", frame.to_dict(orient="records"), TRAJECTORY_COLUMNS,
                      metadata, **output)


def _default_t_end(system: SystemSpec, bath: BathSpec, mode: GeneratorMode,
                   cache: Optional[CoefficientCache] = None) -> float:
    """50 relaxation times of the slowest asymptotic mode, counted from the end of the cache."""
    start = cache.t_max if cache is not None else 0.0
    M = np.array(generator_for(system, bath, mode).M)
    slowest = float(np.min(np.abs(np.linalg.eigvals(M).real)))
    if slowest == 0.0:
        return start + 100.0
    return start + 50.0 / slowest


def write_divergence(config: Config, writer: ResultWriter, output: Dict[str, Any]) -> None:
    brackets = SweepOrchestrator(config).scan_divergence()
    rows = [{"f1": b.f1, "f2": b.f2, "t_low": b.t_low, "t_high": b.t_high,
             "flags": "|".join(b.flags)} for b in brackets]
    writer.write_rows("scan-divergence", rows, ["f1", "f2", "t_low", "t_high", "flags"],
                      {"brackets": len(rows)}, **output)


def run_selftest_verb(args: argparse.Namespace, config: Config) -> int:
    report = run_selftest(config, gamma_zero_scale=args.corrupt_gamma_zero)
    print(report.render(color=sys.stdout.isatty()))
    return EXIT_OK if report.passed else EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
