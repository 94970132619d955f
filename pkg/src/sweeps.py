"""Sweep orchestrator: parameter grids, optimization and divergence scans."""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy import optimize

from src.bath import BathSpec, gamma_zero_limit
from src.config import Config
from src.errors import (
    AllPointsFlaggedError, Flag, InvalidParameterError, SingularGeneratorError, SSCError,
)
from src.logger import AnalysisLogger
from src.positivity import gks_decompose, state_negativity
from src.redfield import GeneratorMode, SystemSpec, generator_for
from src.results import SweepRecord, SweepResult
from src.steady import (
    COHERENCE_LINEARITY_LAMBDA, DENOMINATOR_TOLERANCE, LINEARITY_LAMBDA, closed_form_denominator,
    linearity_check, log_log_slope, regime_flags, scaling_report, solve_steady, v1_closed_form,
)

PROGRESS_EVERY = 10


@dataclass(frozen=True)
class DivergenceBracket:
    """Temperature interval of width ≤ ``bracket_width`` holding a denominator zero."""
    f1: float
    f2: float
    t_low: float
    t_high: float
    flags: Tuple[str, ...] = ()

    @property
    def temperature(self) -> float:
        return 0.5 * (self.t_low + self.t_high)


def make_point(config: Config, **overrides: Any) -> Dict[str, Any]:
    """Plain parameter mapping for one sweep point (picklable for the worker pool)."""
    point = {
        "lam": config.coupling,
        "s": config.ohmicity,
        "cutoff": config.cutoff,
        "temperature": config.temperature,
        "f1": config.f1,
        "f2": config.f2,
        "mode": config.mode,
        "omega0": config.omega0,
    }
    point.update(overrides)
    return point


def evaluate_point(point: Dict[str, Any]) -> SweepRecord:
    """Steady state, coherence and negativities of one parameter point.

    Numerical failures are stored on the record as flags; nothing raises.
    """
    record = SweepRecord(**point)
    try:
        bath = BathSpec(point["lam"], point["s"], point["cutoff"], point["temperature"])
        system = SystemSpec(point["f1"], point["f2"], point["omega0"])
        mode = GeneratorMode(point["mode"])
    except (InvalidParameterError, ValueError) as e:
        record.flags = (Flag.NUMERICAL_FAILURE,)
        record.error_message = str(e)
        return record

    flags = list(regime_flags(system, bath))
    if bath.s > 1.0 and bath.temperature > 0.0 and gamma_zero_limit(bath) == 0.0:
        flags.append(Flag.NO_DEPHASING_TERM)
    if not bath.is_sub_ohmic and mode is GeneratorMode.NONSECULAR:
        try:
            if abs(closed_form_denominator(system, bath)) < DENOMINATOR_TOLERANCE * system.omega0:
                flags.append(Flag.DENOMINATOR_ZERO)
        except SSCError as e:
            flags.append(Flag.NUMERICAL_FAILURE)
            record.error_message = str(e)

    try:
        generator = generator_for(system, bath, mode)
        record.negativity_k = gks_decompose(generator).negativity
        if bath.is_sub_ohmic:
            state = v1_closed_form(system, bath)
        else:
            state = solve_steady(generator)
        record.v1, record.v2, record.v3 = state.v1, state.v2, state.v3
        record.coherence = state.coherence
        record.state_negativity = state_negativity(state.vector)
        flags.extend(f for f in state.flags if f not in flags)
    except SingularGeneratorError as e:
        flags.append(Flag.SINGULAR_GENERATOR)
        record.error_message = str(e)
    except SSCError as e:
        flags.append(Flag.NUMERICAL_FAILURE)
        record.error_message = str(e)
    record.flags = tuple(flags)
    return record


class SweepOrchestrator:
    """Runs sweeps over parameter grids and collects records in input order."""

    def __init__(self, config: Config, workers: Optional[int] = None):
        self.config = config
        self.workers = workers or config.workers
        self.logger = AnalysisLogger("sweeps")

    def run_points(self, points: List[Dict[str, Any]], sweep: str) -> List[SweepRecord]:
        """Evaluate ``points`` with the worker pool; output order equals input order."""
        total = len(points)
        self.logger.info("Starting sweep", sweep=sweep, points=total, workers=self.workers)
        records: List[SweepRecord] = []
        if self.workers > 1 and total > 1:
            chunksize = max(1, total // (4 * self.workers))
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                for record in pool.map(evaluate_point, points, chunksize=chunksize):
                    self._collect(record, records, total, sweep)
        else:
            for point in points:
                self._collect(evaluate_point(point), records, total, sweep)
        return records

    def _collect(self, record: SweepRecord, records: List[SweepRecord],
                 total: int, sweep: str) -> None:
        records.append(record)
        if record.error_message:
            self.logger.warning("Point flagged", sweep=sweep, flags="|".join(record.flags),
                                error=record.error_message, **record.parameters)
        if len(records) % PROGRESS_EVERY == 0 or len(records) == total:
            self.logger.log_sweep_progress(total=total, processed=len(records), sweep=sweep)

    def _windowed_slope(self, records: List[SweepRecord], attribute: str) -> Optional[float]:
        low, high = self.config.slope_window
        chosen = [r for r in records
                  if low <= r.lam <= high and getattr(r, attribute) is not None]
        return log_log_slope([r.lam for r in chosen], [getattr(r, attribute) for r in chosen])

    def _linearity(self, records: List[SweepRecord], attribute: str,
                   upper: float) -> Optional[bool]:
        chosen = [r for r in records if getattr(r, attribute) is not None]
        if len(chosen) < 2:
            return None
        report = scaling_report([r.lam for r in chosen], [getattr(r, attribute) for r in chosen])
        return linearity_check(report, upper).linear

    def sweep_lambda(self, **overrides: Any) -> SweepResult:
        """𝒞(λ) and 𝒩_K(λ) on a log grid, with log-log slopes over the slope window."""
        grid = self.config.lambda_grid
        lambdas = np.geomspace(grid["start"], grid["stop"], grid["points"])
        points = [make_point(self.config, **overrides, lam=float(lam)) for lam in lambdas]
        records = self.run_points(points, "lambda")
        metadata = {
            "coherence_slope": self._windowed_slope(records, "coherence"),
            "negativity_slope": self._windowed_slope(records, "negativity_k"),
            "coherence_linear": self._linearity(records, "coherence", COHERENCE_LINEARITY_LAMBDA),
            "negativity_linear": self._linearity(records, "negativity_k", LINEARITY_LAMBDA),
            "slope_window": self.config.slope_window,
        }
        self.logger.info("Lambda sweep finished", **metadata)
        return SweepResult("sweep-lambda", records, metadata)

    def sweep_temperature(self, **overrides: Any) -> SweepResult:
        """𝒞(T) and steady-state negativity for each configured Ohmicity exponent."""
        grid = self.config.temperature_grid
        temperatures = np.linspace(grid["start"], grid["stop"], grid["points"])
        exponents = [overrides.pop("s")] if "s" in overrides else self.config.temperature_exponents
        points = [make_point(self.config, **overrides, s=float(s), temperature=float(t))
                  for s in exponents for t in temperatures]
        records = self.run_points(points, "temperature")

        metadata: Dict[str, Any] = {}
        for s in exponents:
            negative = [r.temperature for r in records
                        if r.s == s and r.state_negativity is not None and r.state_negativity > 0.0]
            metadata[f"negativity_threshold_s{s:g}"] = max(negative) if negative else None
        self.logger.info("Temperature sweep finished", **metadata)
        return SweepResult("sweep-temp", records, metadata)

    def optimize_f(self, fmax: Optional[float] = None, **overrides: Any) -> SweepResult:
        """Maximize 𝒞 over the box [0, fmax]²: grid search, then coordinate ascent.

        DenominatorZero-flagged points and failed points are never candidates.
        """
        settings = self.config.optimize_settings
        fmax = settings["fmax"] if fmax is None else fmax
        if not fmax > 0.0:
            raise InvalidParameterError("fmax must be > 0", {"fmax": fmax})
        axis = np.linspace(0.0, fmax, settings["grid_points"])
        points = [make_point(self.config, **overrides, f1=float(f1), f2=float(f2))
                  for f1 in axis for f2 in axis]
        records = self.run_points(points, "optimize-f")
        candidates = [r for r in records if _is_candidate(r)]
        if not candidates:
            raise AllPointsFlaggedError("every point of the box is flagged", {"fmax": fmax})

        best = max(candidates, key=lambda r: r.coherence)
        step = fmax / max(1, settings["grid_points"] - 1)
        evaluations = 0
        while step >= settings["min_step"]:
            improved = False
            for name in ("f1", "f2"):
                for direction in (1.0, -1.0):
                    value = min(fmax, max(0.0, getattr(best, name) + direction * step))
                    if value == getattr(best, name):
                        continue
                    trial = evaluate_point({**best.parameters, name: value})
                    evaluations += 1
                    if _is_candidate(trial) and trial.coherence > best.coherence:
                        best, improved = trial, True
            if not improved:
                step /= 2.0

        self.logger.info("Optimum found", f1=best.f1, f2=best.f2, coherence=best.coherence,
                         ascent_evaluations=evaluations)
        metadata = {"fmax": fmax, "argmax": {"f1": best.f1, "f2": best.f2},
                    "max_coherence": best.coherence}
        return SweepResult("optimize-f", [best], metadata)

    def scan_divergence(self, **overrides: Any) -> List[DivergenceBracket]:
        """Bracket sign changes in T of the closed-form denominator on an (f1, f2) grid."""
        settings = self.config.divergence_settings
        base = make_point(self.config, **overrides)
        bath = BathSpec(base["lam"], base["s"], base["cutoff"], base["temperature"])
        if bath.is_sub_ohmic:
            raise InvalidParameterError("denominator scan needs s >= 1", {"s": bath.s})
        temperatures = np.geomspace(float(settings["temperature_min"]),
                                    float(settings["temperature_max"]),
                                    int(settings["temperature_points"]))
        weights = np.linspace(0.0, float(settings["f_max"]), int(settings["f_points"]))
        width = float(settings["bracket_width"])

        brackets: List[DivergenceBracket] = []
        for f1 in weights:
            for f2 in weights:
                if f1 * f2 == 0.0:
                    # coherence vanishes identically; f1 = 0 also leaves v̄ non-unique
                    continue
                system = SystemSpec(float(f1), float(f2), base["omega0"])

                def denominator(t: float) -> float:
                    return closed_form_denominator(system, bath.with_temperature(t))

                flags = regime_flags(system, bath)
                for t_low, t_high in _sign_changes(denominator, temperatures):
                    root = optimize.bisect(denominator, t_low, t_high, xtol=width / 2.0)
                    bracket = DivergenceBracket(float(f1), float(f2), root - width / 2.0,
                                                root + width / 2.0, flags)
                    self.logger.warning("Denominator zero bracketed", f1=bracket.f1,
                                        f2=bracket.f2, temperature=bracket.temperature)
                    brackets.append(bracket)
        self.logger.info("Divergence scan finished", brackets=len(brackets))
        return brackets


def _is_candidate(record: SweepRecord) -> bool:
    return record.coherence is not None and not record.has_flag(Flag.DENOMINATOR_ZERO)


def _sign_changes(func: Callable[[float], float],
                  grid: Iterable[float]) -> List[Tuple[float, float]]:
    """Adjacent grid pairs on which ``func`` changes sign or hits zero."""
    grid = list(grid)
    values = [func(t) for t in grid]
    pairs = []
    for i in range(len(grid) - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0:
            pairs.append((grid[i], grid[i + 1]))
        elif math.copysign(1.0, a) != math.copysign(1.0, b) and b != 0.0:
            pairs.append((grid[i], grid[i + 1]))
    return pairs
