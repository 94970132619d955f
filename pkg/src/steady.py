"""Steady states of the Bloch-Redfield flow and the closed-form coherence."""

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.bath import (
    BathSpec, gamma_zero_limit, j_eff, lamb_shift_delta, lamb_shift_zero,
)
from src.errors import (
    DenominatorZeroError, Flag, InvalidParameterError, NonUniqueSteadyStateError,
    NumericalError, SingularGeneratorError, is_divergent,
)
from src.logger import AnalysisLogger
from src.redfield import BlochGenerator, GeneratorMode, SystemSpec, generator_for

logger = AnalysisLogger("steady")

PHYSICAL_TOLERANCE = 1.0e-12
RESIDUAL_TOLERANCE = 1.0e-12
DENOMINATOR_TOLERANCE = 1.0e-12
CONDITION_LIMIT = 1.0e14
LINEARITY_LAMBDA = 1.0e-3
# 𝒞/λ picks up an O(λ) correction from the denominator that nears 1% at λ = 1e-3
COHERENCE_LINEARITY_LAMBDA = 1.0e-4
LINEARITY_SPREAD = 0.01

LINEAR_SOLVE = "linear-solve"
CLOSED_FORM = "closed-form"
LEADING_ORDER = "closed-form-leading-order"


@dataclass(frozen=True)
class SteadyState:
    """Fixed point v̄ of v̇ = Mv + b with its coherence 𝒞 = √(v̄₁² + v̄₂²)."""
    v1: float
    v2: float
    v3: float
    method: str = LINEAR_SOLVE
    flags: Tuple[str, ...] = ()

    @property
    def coherence(self) -> float:
        return math.hypot(self.v1, self.v2)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.v1, self.v2, self.v3])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    @property
    def physical(self) -> bool:
        return self.v1 ** 2 + self.v2 ** 2 + self.v3 ** 2 <= 1.0 + PHYSICAL_TOLERANCE


@dataclass(frozen=True)
class ScalingReport:
    """Values of a quantity along a λ grid and its linearity diagnostics."""
    lambdas: np.ndarray
    values: np.ndarray
    ratios: np.ndarray
    spread: float
    slope: Optional[float] = None
    flags: Tuple[str, ...] = field(default=())
    # None when fewer than two points fall inside the linear window
    linear: Optional[bool] = None

    @property
    def vanishes(self) -> bool:
        return bool(np.all(self.values == 0.0))


def regime_flags(system: SystemSpec, bath: BathSpec) -> Tuple[str, ...]:
    """WeakCouplingWarning when λ > 0.1 or a channel weight exceeds 3."""
    if bath.weak_coupling and system.weak_coupling:
        return ()
    logger.warning("Parameters outside the weak-coupling regime",
                   lam=bath.lam, f1=system.f1, f2=system.f2)
    return (Flag.WEAK_COUPLING_WARNING,)


def solve_steady(gen: BlochGenerator) -> SteadyState:
    """v̄ = −M⁻¹b by an LU solve with partial pivoting, residual-checked."""
    M, b = np.asarray(gen.M), np.asarray(gen.b)
    scale = max(float(np.max(np.abs(M))), 1.0e-300)

    if np.max(np.abs(M[2])) <= 1.0e-14 * scale and abs(b[2]) <= 1.0e-14 * scale:
        raise NonUniqueSteadyStateError(
            "populations are not relaxed; every diagonal state is stationary",
            {"mode": gen.mode.value})

    if gen.infinite_dephasing:
        # transverse components are damped at an infinite rate
        if M[2, 2] == 0.0:
            raise SingularGeneratorError("no longitudinal relaxation", {"mode": gen.mode.value})
        v3 = -b[2] / M[2, 2]
        return SteadyState(0.0, 0.0, float(v3), LINEAR_SOLVE, (Flag.INFINITE_DEPHASING,))

    condition = np.linalg.cond(M)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise SingularGeneratorError("Bloch matrix is singular",
                                     {"condition": float(condition), "mode": gen.mode.value})
    try:
        v = np.linalg.solve(M, -b)
    except np.linalg.LinAlgError as e:
        raise SingularGeneratorError(str(e), {"mode": gen.mode.value}) from e

    residual = float(np.linalg.norm(M @ v + b))
    bound = RESIDUAL_TOLERANCE * (np.linalg.norm(M, 2) * np.linalg.norm(v) + np.linalg.norm(b))
    logger.log_numerical_event("linear solve", residual=residual, condition=float(condition))
    if residual > max(bound, 1.0e-300):
        raise NumericalError("steady-state residual above tolerance",
                             {"residual": residual, "bound": float(bound)})
    return SteadyState(float(v[0]), float(v[1]), float(v[2]), LINEAR_SOLVE)


def steady_state(system: SystemSpec, bath: BathSpec,
                 mode: GeneratorMode = GeneratorMode.NONSECULAR) -> SteadyState:
    """solve_steady on the asymptotic generator, with regime flags attached."""
    state = solve_steady(generator_for(system, bath, mode))
    flags = state.flags + regime_flags(system, bath)
    return SteadyState(state.v1, state.v2, state.v3, state.method, flags)


def _thermal_polarization(system: SystemSpec, bath: BathSpec) -> float:
    if bath.temperature == 0.0:
        return 1.0
    return math.tanh(system.omega0 / (2.0 * bath.temperature))


def dephasing_ratio(system: SystemSpec, bath: BathSpec) -> float:
    """γ₁/(γ₊ + γ₋) = 2λT/J_eff(ω₀) for s = 1; zero for s > 1."""
    rate = gamma_zero_limit(bath)
    if is_divergent(rate):
        raise InvalidParameterError("dephasing rate diverges for s < 1 at T > 0",
                                    {"s": bath.s, "temperature": bath.temperature})
    if rate == 0.0:
        return 0.0
    return rate / (2.0 * math.pi * j_eff(system.omega0, bath))


def closed_form_denominator(system: SystemSpec, bath: BathSpec) -> float:
    """ω₀ + f₁²Δ₁ + f₂²·Δ₁·γ₁/(γ₊ + γ₋)."""
    delta1, _ = lamb_shift_delta(bath, system.omega0)
    return (system.omega0 + system.f1 ** 2 * delta1
            + system.f2 ** 2 * delta1 * dephasing_ratio(system, bath))


def _numerator(system: SystemSpec, bath: BathSpec) -> float:
    delta1, delta2 = lamb_shift_delta(bath, system.omega0)
    # −4S(0) = 4λΩΓ(s)
    cutoff_term = -4.0 * lamb_shift_zero(bath)
    return system.f1 * system.f2 * (
        delta1 * _thermal_polarization(system, bath) - cutoff_term - delta2)


def longitudinal_balance(system: SystemSpec, bath: BathSpec, v1: float) -> float:
    """v̄₃ from the population equation given v̄₁ (v̄₂ = 0).

    v̄₃ = −tanh(ω₀/2T) + (f₂/f₁)·γ₁/(γ₊ + γ₋)·v̄₁
    """
    if system.f1 == 0.0:
        raise NonUniqueSteadyStateError("populations are not relaxed", {"f1": system.f1})
    polarization = -_thermal_polarization(system, bath)
    if v1 == 0.0:
        return polarization
    return polarization + (system.f2 / system.f1) * dephasing_ratio(system, bath) * v1


def _closed_form_flags(system: SystemSpec, bath: BathSpec) -> Tuple[str, ...]:
    flags = regime_flags(system, bath)
    if not bath.is_ohmic:
        flags += (Flag.MODEL_ASSUMPTION,)
    return flags


def _sub_ohmic_state(system: SystemSpec, bath: BathSpec, method: str) -> SteadyState:
    flags = (Flag.SUB_OHMIC,) + regime_flags(system, bath)
    if bath.temperature > 0.0 and system.f2 > 0.0:
        flags += (Flag.INFINITE_DEPHASING,)
    return SteadyState(0.0, 0.0, -_thermal_polarization(system, bath), method, flags)


def _assemble(system: SystemSpec, bath: BathSpec, v1: float, method: str,
              flags: Tuple[str, ...]) -> SteadyState:
    try:
        v3 = longitudinal_balance(system, bath, v1)
    except NonUniqueSteadyStateError:
        v3 = -_thermal_polarization(system, bath)
        flags += (Flag.SINGULAR_GENERATOR,)
    return SteadyState(v1, 0.0, v3, method, flags)


def v1_closed_form(system: SystemSpec, bath: BathSpec) -> SteadyState:
    """Closed-form steady coherence of the full Bloch-Redfield generator.

        v̄₁ = f₁f₂[Δ₁ tanh(ω₀/2T) − 4λΩΓ(s) − Δ₂] / [ω₀ + f₁²Δ₁ + f₂²Δ₁γ₁/(γ₊+γ₋)],
        v̄₂ = 0.

    For s = 1 the dephasing ratio is 2λT/J_eff(ω₀, T); for s > 1 it vanishes.
    Sub-Ohmic baths return zero coherence with the SubOhmic flag.
    """
    if bath.is_sub_ohmic:
        return _sub_ohmic_state(system, bath, CLOSED_FORM)
    flags = _closed_form_flags(system, bath)
    denominator = closed_form_denominator(system, bath)
    if abs(denominator) < DENOMINATOR_TOLERANCE * system.omega0:
        raise DenominatorZeroError("closed-form denominator vanishes",
                                   {"denominator": denominator, "lam": bath.lam,
                                    "temperature": bath.temperature,
                                    "f1": system.f1, "f2": system.f2})
    v1 = _numerator(system, bath) / denominator
    return _assemble(system, bath, v1, CLOSED_FORM, flags)


def v1_leading_order(system: SystemSpec, bath: BathSpec) -> SteadyState:
    """The O(λ) truncation: closed-form numerator over ω₀."""
    if bath.is_sub_ohmic:
        return _sub_ohmic_state(system, bath, LEADING_ORDER)
    v1 = _numerator(system, bath) / system.omega0
    return _assemble(system, bath, v1, LEADING_ORDER, _closed_form_flags(system, bath))


def log_log_slope(lambdas: Sequence[float], values: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log|value| against log λ; None if fewer than two nonzero points."""
    x = np.asarray(lambdas, dtype=float)
    y = np.abs(np.asarray(values, dtype=float))
    keep = (x > 0.0) & (y > 0.0)
    if np.count_nonzero(keep) < 2:
        return None
    return float(stats.linregress(np.log(x[keep]), np.log(y[keep])).slope)


def scaling_report(lambdas: Sequence[float], values: Sequence[float],
                   flags: Tuple[str, ...] = ()) -> ScalingReport:
    lambdas = np.asarray(lambdas, dtype=float)
    values = np.asarray(values, dtype=float)
    ratios = values / lambdas
    mean = float(np.mean(np.abs(ratios)))
    spread = 0.0 if mean == 0.0 else float((np.max(ratios) - np.min(ratios)) / mean)
    return ScalingReport(lambdas, values, ratios, spread, log_log_slope(lambdas, values), flags)


def linearity_check(report: ScalingReport,
                     upper: float = LINEARITY_LAMBDA) -> ScalingReport:
    """Set ``linear``: the ratio spread over λ ≤ ``upper`` stays below 1%."""
    weak = report.lambdas <= upper
    if np.count_nonzero(weak) < 2 or report.vanishes:
        return report
    spread = scaling_report(report.lambdas[weak], report.values[weak]).spread
    return replace(report, linear=spread < LINEARITY_SPREAD)


def coherence_scaling(system: SystemSpec, bath: BathSpec, lambdas: Sequence[float],
                      mode: GeneratorMode = GeneratorMode.NONSECULAR) -> ScalingReport:
    """𝒞(λ)/λ across ``lambdas`` with the other bath parameters of ``bath``."""
    if len(lambdas) < 2:
        raise InvalidParameterError("scaling needs at least two lambda values",
                                    {"points": len(lambdas)})
    values = [steady_state(system, bath.with_lambda(lam), mode).coherence for lam in lambdas]
    report = linearity_check(scaling_report(lambdas, values), COHERENCE_LINEARITY_LAMBDA)
    logger.debug("Coherence scaling", spread=report.spread, slope=report.slope,
                 linear=report.linear)
    return report
