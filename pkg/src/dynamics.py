"""Time-local Bloch-Redfield dynamics and Bloch-ball monitoring."""

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from src.bath import BathSpec, RedfieldCoefficients, gamma_zero_limit, redfield_coefficients
from src.errors import (
    CoefficientCacheError, InvalidParameterError, NumericalError, SSCError,
    StepSizeUnderflowError, is_divergent,
)
from src.logger import AnalysisLogger
from src.redfield import GeneratorMode, SystemSpec, build_generator
from src.steady import steady_state

logger = AnalysisLogger("dynamics")

COEFFICIENT_FIELDS = ("gamma_plus", "gamma_minus", "gamma_zero",
                      "shift_plus", "shift_minus", "shift_zero")
VIOLATION_THRESHOLD = 1.0e-9
CONVERGENCE_TOLERANCE = 1.0e-6
TRAJECTORY_COLUMNS = ["t", "v1", "v2", "v3", "norm", "physical"]


class CoefficientCache:
    """Finite-time Redfield coefficients on a log-spaced time grid.

    Values are PCHIP-interpolated in t between 0 (where every coefficient
    vanishes) and ``t_max``; beyond ``t_max`` the asymptotic values are held.
    A divergent asymptotic dephasing rate holds its last grid value instead.
    Once built, the cache is read-only.
    """

    def __init__(self, bath: BathSpec, omega0: float = 1.0, t_min: float = 1.0e-3,
                 t_max: float = 1.0e3, points_per_decade: int = 64):
        if not 0.0 < t_min < t_max:
            raise InvalidParameterError("cache grid needs 0 < t_min < t_max",
                                        {"t_min": t_min, "t_max": t_max})
        if points_per_decade < 1:
            raise InvalidParameterError("points_per_decade must be >= 1",
                                        {"points_per_decade": points_per_decade})
        self.bath = bath
        self.omega0 = omega0
        decades = math.log10(t_max / t_min)
        points = max(2, int(math.ceil(decades * points_per_decade)) + 1)
        self.times = np.concatenate(([0.0], np.geomspace(t_min, t_max, points)))
        self.t_max = t_max

        try:
            table = np.array([self._row(redfield_coefficients(bath, omega0, t))
                              for t in self.times])
            asymptotic = redfield_coefficients(bath, omega0)
        except SSCError as e:
            raise CoefficientCacheError("coefficient table could not be built",
                                        {"cause": str(e), **e.diagnostics}) from e
        if not np.all(np.isfinite(table)):
            raise CoefficientCacheError("non-finite coefficient in table", {"lam": bath.lam})

        self.table = table
        self._interpolator = PchipInterpolator(self.times, table, axis=0, extrapolate=False)
        tail = table[-1].copy()
        for i, name in enumerate(COEFFICIENT_FIELDS):
            value = getattr(asymptotic, name)
            if not is_divergent(value):
                tail[i] = value
        self._tail = tail
        self._template = replace(asymptotic, gamma_zero=0.0)
        logger.debug("Coefficient cache built", points=len(self.times), lam=bath.lam)

    @staticmethod
    def _row(coeffs: RedfieldCoefficients) -> List[float]:
        return [getattr(coeffs, name) for name in COEFFICIENT_FIELDS]

    def values(self, t: float) -> np.ndarray:
        """Interpolated (γ₊, γ₋, γ₁, S₊, S₋, S₀) at time t."""
        if t >= self.t_max:
            return self._tail
        return self._interpolator(max(t, 0.0))

    def coefficients(self, t: float) -> RedfieldCoefficients:
        fields = dict(zip(COEFFICIENT_FIELDS, (float(x) for x in self.values(t))))
        return replace(self._template, time=t,
                       delta1=2.0 * (fields["shift_plus"] - fields["shift_minus"]),
                       delta2=2.0 * (fields["shift_plus"] + fields["shift_minus"]),
                       **fields)


class GeneratorBasis:
    """M(c) = M₀ + Σ c_i M_i over the coefficient fields; the generator is linear in them."""

    def __init__(self, system: SystemSpec, mode: GeneratorMode):
        zero = RedfieldCoefficients(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        base = build_generator(system, zero, mode)
        self.M0, self.b0 = np.array(base.M), np.array(base.b)
        slopes_M, slopes_b = [], []
        for name in COEFFICIENT_FIELDS:
            gen = build_generator(system, replace(zero, **{name: 1.0}), mode)
            slopes_M.append(np.array(gen.M) - self.M0)
            slopes_b.append(np.array(gen.b) - self.b0)
        self.slopes_M = np.array(slopes_M)
        self.slopes_b = np.array(slopes_b)

    def assemble(self, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        M = self.M0 + np.tensordot(values, self.slopes_M, axes=1)
        b = self.b0 + np.tensordot(values, self.slopes_b, axes=1)
        return M, b


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    physical_flags: np.ndarray
    converged: bool
    reference: Optional[np.ndarray] = None

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "v1": self.states[:, 0],
            "v2": self.states[:, 1],
            "v3": self.states[:, 2],
            "norm": self.norms,
            "physical": self.physical_flags,
        }, columns=TRAJECTORY_COLUMNS)

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")


@dataclass(frozen=True)
class PositivityViolation:
    """First pure initial state found to leave the Bloch ball."""
    theta: float
    phi: float
    v0: Tuple[float, float, float]
    time: float
    norm: float
    scanned: int
    finite_time: bool = False

    found = True


@dataclass(frozen=True)
class NoViolationFound:
    scanned: int
    t_end: float
    max_norm: float
    finite_time: bool = False

    found = False


def _check_initial_state(v0: Sequence[float]) -> np.ndarray:
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (3,):
        raise InvalidParameterError("initial Bloch vector needs 3 components",
                                    {"shape": v0.shape})
    if np.linalg.norm(v0) > 1.0 + 1.0e-12:
        raise InvalidParameterError("initial Bloch vector outside the ball",
                                    {"norm": float(np.linalg.norm(v0))})
    return v0


def _asymptotic_rhs(system: SystemSpec, bath: BathSpec, mode: GeneratorMode):
    coeffs = redfield_coefficients(bath, system.omega0)
    if coeffs.dephasing_divergent and system.f2 > 0.0:
        raise InvalidParameterError(
            "asymptotic dephasing rate diverges; use finite-time coefficients",
            {"s": bath.s, "temperature": bath.temperature})
    gen = build_generator(system, coeffs, mode)
    M, b = np.array(gen.M), np.array(gen.b)

    def rhs(t: float, v: np.ndarray) -> np.ndarray:
        return M @ v + b
    return rhs


def _finite_time_rhs(system: SystemSpec, mode: GeneratorMode, cache: CoefficientCache):
    basis = GeneratorBasis(system, mode)

    def rhs(t: float, v: np.ndarray) -> np.ndarray:
        M, b = basis.assemble(cache.values(t))
        return M @ v + b
    return rhs


def _integrate(rhs, v0: np.ndarray, t_end: float, t_eval: Optional[np.ndarray],
               rtol: float, atol: float, events=None):
    result = solve_ivp(rhs, (0.0, t_end), v0, method="DOP853", t_eval=t_eval,
                       rtol=rtol, atol=atol, events=events)
    if result.status == -1:
        if "step size" in result.message.lower():
            raise StepSizeUnderflowError(result.message, {"t_end": t_end})
        raise NumericalError(result.message, {"t_end": t_end})
    logger.log_numerical_event("ode integration", nfev=int(result.nfev), t_end=t_end)
    return result


def evolve(system: SystemSpec, bath: BathSpec, mode: GeneratorMode, v0: Sequence[float],
           t_end: float, samples: int = 201, rtol: float = 1.0e-9, atol: float = 1.0e-12,
           cache: Optional[CoefficientCache] = None,
           convergence_tolerance: float = CONVERGENCE_TOLERANCE,
           threshold: float = VIOLATION_THRESHOLD) -> Trajectory:
    """Integrate v̇ = M(t)v + b(t) from v(0) = v0 up to ``t_end``.

    Non-secular and partial modes use finite-time coefficients from ``cache``
    (built with default grid settings when omitted). Secular mode uses the
    time-independent Davies generator.
    """
    mode = GeneratorMode(mode)
    v0 = _check_initial_state(v0)
    if not t_end > 0.0:
        raise InvalidParameterError("t_end must be > 0", {"t_end": t_end})
    if samples < 2:
        raise InvalidParameterError("need at least two samples", {"samples": samples})

    if mode is GeneratorMode.SECULAR:
        rhs = _asymptotic_rhs(system, bath, mode)
    else:
        if cache is None:
            cache = CoefficientCache(bath, system.omega0)
        rhs = _finite_time_rhs(system, mode, cache)

    t_eval = np.linspace(0.0, t_end, samples)
    result = _integrate(rhs, v0, t_end, t_eval, rtol, atol)
    states = result.y.T
    physical = np.linalg.norm(states, axis=1) <= 1.0 + threshold

    reference = None
    converged = False
    try:
        reference = steady_state(system, bath, mode).vector
        converged = bool(np.linalg.norm(states[-1] - reference) < convergence_tolerance)
    except SSCError as e:
        logger.debug("No steady-state reference for trajectory", reason=str(e))

    logger.debug("Trajectory integrated", mode=mode.value, t_end=t_end, converged=converged,
                 min_margin=float(np.min(1.0 - np.linalg.norm(states, axis=1))))
    return Trajectory(result.t, states, physical, converged, reference)


def bloch_sphere_grid(theta_points: int = 12, phi_points: int = 24) -> List[Tuple[float, float]]:
    """Polar/azimuthal angles of the scanned pure states; each pole appears once."""
    thetas = np.linspace(0.0, math.pi, theta_points)
    phis = np.linspace(0.0, 2.0 * math.pi, phi_points, endpoint=False)
    grid = []
    for i, theta in enumerate(thetas):
        pole = i == 0 or i == len(thetas) - 1
        grid.extend((float(theta), float(phi)) for phi in (phis[:1] if pole else phis))
    return grid


def find_positivity_violation(system: SystemSpec, bath: BathSpec,
                              mode: GeneratorMode = GeneratorMode.NONSECULAR,
                              theta_points: int = 12, phi_points: int = 24,
                              t_end: float = 20.0, threshold: float = VIOLATION_THRESHOLD,
                              finite_time: bool = False,
                              cache: Optional[CoefficientCache] = None,
                              rtol: float = 1.0e-11,
                              atol: float = 1.0e-13) -> Union[PositivityViolation, NoViolationFound]:
    """Scan pure initial states and return the first one leaving the Bloch ball.

    The scan uses the asymptotic generator unless ``finite_time`` is set. A
    divergent asymptotic dephasing rate (sub-Ohmic bath, f₂ > 0) switches the
    scan to finite-time coefficients.
    """
    mode = GeneratorMode(mode)
    if not finite_time and system.f2 > 0.0 and is_divergent(gamma_zero_limit(bath)):
        logger.warning("Asymptotic dephasing rate diverges; scanning with finite-time "
                       "coefficients", s=bath.s, temperature=bath.temperature)
        finite_time = True
    if finite_time:
        rhs = _finite_time_rhs(system, mode, cache or CoefficientCache(bath, system.omega0))
    else:
        rhs = _asymptotic_rhs(system, bath, mode)

    def leaves_ball(t: float, v: np.ndarray) -> float:
        return float(np.linalg.norm(v)) - (1.0 + threshold)
    leaves_ball.terminal = True
    leaves_ball.direction = 1.0

    max_norm = 0.0
    grid = bloch_sphere_grid(theta_points, phi_points)
    for scanned, (theta, phi) in enumerate(grid, start=1):
        v0 = np.array([math.sin(theta) * math.cos(phi),
                       math.sin(theta) * math.sin(phi),
                       math.cos(theta)])
        result = _integrate(rhs, v0, t_end, None, rtol, atol, events=leaves_ball)
        max_norm = max(max_norm, float(np.max(np.linalg.norm(result.y, axis=0))))
        if result.t_events[0].size:
            time = float(result.t_events[0][0])
            norm = float(np.linalg.norm(result.y_events[0][0]))
            logger.info("Bloch-ball exit found", theta=theta, phi=phi, time=time, norm=norm)
            return PositivityViolation(theta, phi, tuple(float(x) for x in v0),
                                       time, norm, scanned, finite_time)
    logger.info("No Bloch-ball exit found", scanned=len(grid), max_norm=max_norm)
    return NoViolationFound(len(grid), t_end, max_norm, finite_time)


def trajectory_summary(trajectory: Trajectory) -> Dict[str, float]:
    return {
        "t_end": float(trajectory.times[-1]),
        "min_margin": float(np.min(1.0 - trajectory.norms)),
        "converged": trajectory.converged,
    }
