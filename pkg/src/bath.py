"""Spectral densities, bath correlations and Redfield coefficients.

All frequencies are in units of the level splitting ω₀ and ħ = k_B = 1.
The bath family is the exponentially cut-off power law

    J(ω) = λ ω^s Ω^(1-s) exp(-ω/Ω)

and every coefficient is computed for λ = 1 and rescaled, so that all
entries of a :class:`RedfieldCoefficients` are exactly linear in λ.
"""

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Tuple, Union

import numpy as np
from scipy import integrate, special

from src.errors import (
    Divergent, InvalidParameterError, QuadratureError, is_divergent,
)
from src.logger import AnalysisLogger

logger = AnalysisLogger("bath")

EPSREL = 1.0e-10
SUBDIV_LIMIT = 2000
FOURIER_CYCLES = 200
WEAK_COUPLING_LAMBDA = 0.1

Rate = Union[float, type(Divergent)]


@dataclass(frozen=True)
class BathSpec:
    """Bosonic bath: coupling scale λ, Ohmicity s, cutoff Ω, temperature T."""
    lam: float
    s: float = 1.0
    cutoff: float = 10.0
    temperature: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise InvalidParameterError("lambda must be >= 0", {"lam": self.lam})
        if not self.s > 0.0:
            raise InvalidParameterError("Ohmicity s must be > 0", {"s": self.s})
        if not self.cutoff > 0.0:
            raise InvalidParameterError("cutoff must be > 0", {"cutoff": self.cutoff})
        if not self.temperature >= 0.0:
            raise InvalidParameterError(
                "temperature must be >= 0", {"temperature": self.temperature})

    @property
    def weak_coupling(self) -> bool:
        """True inside the weak-coupling regime λ ≤ 0.1."""
        return self.lam <= WEAK_COUPLING_LAMBDA

    @property
    def is_ohmic(self) -> bool:
        return abs(self.s - 1.0) < 1.0e-12

    @property
    def is_sub_ohmic(self) -> bool:
        return self.s < 1.0 and not self.is_ohmic

    def with_lambda(self, lam: float) -> "BathSpec":
        return replace(self, lam=lam)

    def with_temperature(self, temperature: float) -> "BathSpec":
        return replace(self, temperature=temperature)


@dataclass(frozen=True)
class RedfieldCoefficients:
    """Rates and Lamb shifts of the Redfield generator at time ``time``.

    ``gamma_plus`` and ``gamma_minus`` are 2·Re Γ(±ω₀, t); ``gamma_zero`` is
    γ₁ = 4·Re Γ(0, t), the pure-dephasing rate per unit f₂².
    """
    gamma_plus: float
    gamma_minus: float
    gamma_zero: Rate
    shift_plus: float
    shift_minus: float
    shift_zero: float
    delta1: float
    delta2: float
    time: float = math.inf

    @property
    def is_asymptotic(self) -> bool:
        return math.isinf(self.time)

    @property
    def dephasing_divergent(self) -> bool:
        return is_divergent(self.gamma_zero)

    def gamma(self, channel: int) -> complex:
        """Complex half-Fourier coefficient Γ for channel +1, -1 or 0."""
        if channel > 0:
            return complex(0.5 * self.gamma_plus, self.shift_plus)
        if channel < 0:
            return complex(0.5 * self.gamma_minus, self.shift_minus)
        rate = 0.0 if self.dephasing_divergent else 0.25 * self.gamma_zero
        return complex(rate, self.shift_zero)

    def scaled(self, factor: float) -> "RedfieldCoefficients":
        gamma_zero = self.gamma_zero if self.dephasing_divergent else factor * self.gamma_zero
        return replace(
            self,
            gamma_plus=factor * self.gamma_plus,
            gamma_minus=factor * self.gamma_minus,
            gamma_zero=gamma_zero,
            shift_plus=factor * self.shift_plus,
            shift_minus=factor * self.shift_minus,
            shift_zero=factor * self.shift_zero,
            delta1=factor * self.delta1,
            delta2=factor * self.delta2,
        )


def _unit(bath: BathSpec) -> BathSpec:
    return replace(bath, lam=1.0)


def _j(nu: float, bath: BathSpec) -> float:
    return bath.lam * nu ** bath.s * bath.cutoff ** (1.0 - bath.s) * math.exp(-nu / bath.cutoff)


def _thermal_limit_at_zero(bath: BathSpec) -> float:
    """lim J(ν)(n(ν)+1) for ν → 0⁺ (equal to the ν → 0⁻ limit for T > 0)."""
    if bath.temperature == 0.0 or bath.lam == 0.0:
        return 0.0
    if bath.is_ohmic:
        return bath.lam * bath.temperature
    if bath.s > 1.0:
        return 0.0
    return math.inf


def thermal_spectrum(nu: float, bath: BathSpec) -> float:
    """Two-sided bath spectrum J(|ν|)[n(|ν|) + θ(ν)].

    Positive ν is emission into the bath, negative ν absorption from it.
    """
    if nu == 0.0:
        return _thermal_limit_at_zero(bath)
    a = abs(nu)
    j = _j(a, bath)
    if bath.temperature == 0.0:
        return j if nu > 0.0 else 0.0
    x = a / bath.temperature
    if nu > 0.0:
        return j / -math.expm1(-x)
    return j * math.exp(-x) / -math.expm1(-x)


def spectral_density(omega, bath: BathSpec):
    """J(ω) = λ ω^s Ω^(1-s) e^(-ω/Ω) for ω ≥ 0 (scalar or array)."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0.0):
        raise InvalidParameterError("spectral density needs omega >= 0",
                                    {"omega": omega})
    value = bath.lam * w ** bath.s * bath.cutoff ** (1.0 - bath.s) * np.exp(-w / bath.cutoff)
    return float(value) if value.ndim == 0 else value


def j_eff(omega, bath: BathSpec):
    """Thermally symmetrized spectrum J(ω)·coth(ω/2T); J(ω) at T = 0."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0.0):
        raise InvalidParameterError(
            "j_eff needs omega > 0; use gamma_zero_limit for the omega -> 0+ limit",
            {"omega": omega})
    value = np.asarray(spectral_density(w, bath))
    if bath.temperature > 0.0:
        value = value / np.tanh(w / (2.0 * bath.temperature))
    return float(value) if value.ndim == 0 else value


def gamma_zero_limit(bath: BathSpec) -> Rate:
    """γ₁(+∞) = 2π lim_{ω→0⁺} J_eff(ω, T) = 4πλT δ_{s,1}; Divergent for s < 1, T > 0."""
    if bath.lam == 0.0 or bath.temperature == 0.0:
        return 0.0
    if bath.is_ohmic:
        return 4.0 * math.pi * bath.lam * bath.temperature
    if bath.s > 1.0:
        return 0.0
    return Divergent


def _checked_quad(func: Callable[[float], float], a: float, b: float,
                  what: str, **kwargs) -> float:
    """scipy quad with full output; raise QuadratureError on a poor estimate."""
    kwargs.setdefault("limit", SUBDIV_LIMIT)
    out = integrate.quad(func, a, b, full_output=1, **kwargs)
    value, abserr = out[0], out[1]
    tolerance = max(1.0e3 * kwargs.get("epsabs", 1.49e-8), 1.0e-6 * abs(value))
    if not math.isfinite(value) or abserr > tolerance:
        raise QuadratureError(
            f"quadrature for {what} did not converge",
            {"what": what, "a": a, "b": b, "value": value, "abserr": abserr,
             "message": out[3] if len(out) > 3 else ""})
    if len(out) > 3:
        logger.log_numerical_event("quadrature", status="warning", what=what,
                                   abserr=abserr, message=str(out[3])[:80])
    return value


def _epsabs(unit: BathSpec) -> float:
    return 1.0e-13 * max(1.0, unit.cutoff) ** 2


def _oscillatory_integral(func: Callable[[float], float], t: float, kind: str,
                          head: float, unit: BathSpec, what: str) -> float:
    """∫₀^∞ func(x)·trig(x t) dx.

    Adaptive Gauss–Kronrod on [0, head] (func may be singular at 0) and the
    QUADPACK Fourier-integral rule on [head, ∞).
    """
    trig = math.sin if kind == "sin" else math.cos
    eps = _epsabs(unit)
    head_value = _checked_quad(lambda x: func(x) * trig(x * t), 0.0, head,
                               what + " head", epsabs=eps, epsrel=EPSREL)
    tail_value = _checked_quad(func, head, np.inf, what + " tail",
                               weight=kind, wvar=t, epsabs=eps, limlst=200)
    return head_value + tail_value


def correlation_function(t: float, bath: BathSpec) -> complex:
    """Bath autocorrelation C(t) = ∫₀^∞ J(ω)[coth(ω/2T) cos ωt − i sin ωt] dω."""
    if t < 0.0:
        raise InvalidParameterError("correlation_function needs t >= 0", {"t": t})
    if bath.lam == 0.0:
        return 0j
    return bath.lam * _unit_correlation(float(t), _unit(bath))


@lru_cache(maxsize=4096)
def _unit_correlation(t: float, unit: BathSpec) -> complex:
    temperature = unit.temperature

    def symmetric(w: float) -> float:
        j = _j(w, unit)
        if temperature == 0.0:
            return j
        return j / math.tanh(w / (2.0 * temperature))

    eps = _epsabs(unit)
    if t == 0.0:
        real = (_checked_quad(symmetric, 0.0, unit.cutoff, "C(0) head",
                              epsabs=eps, epsrel=EPSREL)
                + _checked_quad(symmetric, unit.cutoff, np.inf, "C(0) tail",
                                epsabs=eps, epsrel=EPSREL))
        return complex(real, 0.0)

    head = min(unit.cutoff, 2.0 * math.pi * FOURIER_CYCLES / t)
    real = _oscillatory_integral(symmetric, t, "cos", head, unit, "Re C(t)")
    imag = -_oscillatory_integral(lambda w: _j(w, unit), t, "sin", head, unit, "Im C(t)")
    return complex(real, imag)


# --- Lamb shifts -------------------------------------------------------------

def _semi_infinite(func: Callable[[float], float], start: float, length: float,
                   direction: int, what: str, unit: BathSpec) -> float:
    """∫ from ``start`` to ±∞ by the substitution ν = start ∓ L ln u, u ∈ (0, 1]."""

    def mapped(u: float) -> float:
        nu = start - direction * length * math.log(u)
        return func(nu) * length / u

    return _checked_quad(mapped, 0.0, 1.0, what, epsabs=_epsabs(unit), epsrel=EPSREL)


def _negative_decay_length(unit: BathSpec) -> float:
    return 1.0 / (1.0 / unit.cutoff + 1.0 / unit.temperature)


def _pv_pairing(omega: float, unit: BathSpec) -> float:
    """S(ω) with the pole paired symmetrically, ν = ω ± u on |u| < w."""
    width = 0.5 * min(abs(omega), unit.cutoff)
    eps = _epsabs(unit)

    def spectrum(nu: float) -> float:
        return thermal_spectrum(nu, unit)

    def paired(u: float) -> float:
        return -(spectrum(omega + u) - spectrum(omega - u)) / u

    def kernel(nu: float) -> float:
        return spectrum(nu) / (omega - nu)

    total = _checked_quad(paired, 0.0, width, "PV window", epsabs=eps, epsrel=EPSREL)
    lower, upper = omega - width, omega + width
    thermal = unit.temperature > 0.0
    if omega > 0.0:
        total += _checked_quad(kernel, 0.0, lower, "PV left", epsabs=eps, epsrel=EPSREL)
        total += _semi_infinite(kernel, upper, unit.cutoff, +1, "PV right tail", unit)
        if thermal:
            total += _semi_infinite(kernel, 0.0, _negative_decay_length(unit), -1,
                                    "PV negative tail", unit)
    else:
        total += _semi_infinite(kernel, 0.0, unit.cutoff, +1, "PV right tail", unit)
        if thermal:
            total += _checked_quad(kernel, upper, 0.0, "PV middle", epsabs=eps, epsrel=EPSREL)
            total += _semi_infinite(kernel, lower, _negative_decay_length(unit), -1,
                                    "PV negative tail", unit)
    return total


def _pv_subtraction(omega: float, unit: BathSpec) -> float:
    """S(ω) by subtracting the pole residue on the symmetric interval [0, 2ω]."""
    eps = _epsabs(unit)
    pole_value = thermal_spectrum(omega, unit)

    def spectrum(nu: float) -> float:
        return thermal_spectrum(nu, unit)

    def subtracted(nu: float) -> float:
        return (spectrum(nu) - pole_value) / (omega - nu)

    def kernel(nu: float) -> float:
        return spectrum(nu) / (omega - nu)

    lo, hi = sorted((0.0, 2.0 * omega))
    # the interval is symmetric about the pole, so the log term of the
    # subtracted piece vanishes
    total = _checked_quad(subtracted, lo, hi, "PV subtracted", points=[omega],
                          epsabs=eps, epsrel=EPSREL)
    total += _checked_quad(kernel, hi, np.inf, "PV upper", epsabs=eps, epsrel=EPSREL)
    if unit.temperature > 0.0:
        total += _checked_quad(kernel, -np.inf, lo, "PV lower", epsabs=eps, epsrel=EPSREL)
    return total


def _pv_cauchy(omega: float, unit: BathSpec) -> float:
    """S(ω) with QUADPACK's Cauchy-weight rule on a window around the pole."""
    eps = _epsabs(unit)

    def spectrum(nu: float) -> float:
        return thermal_spectrum(nu, unit)

    def kernel(nu: float) -> float:
        return spectrum(nu) / (omega - nu)

    # the window stays clear of ν = 0, where sub-Ohmic spectra are singular
    lo, hi = sorted((0.5 * omega, 1.5 * omega))
    total = -_checked_quad(spectrum, lo, hi, "PV cauchy window", weight="cauchy",
                           wvar=omega, epsabs=eps, epsrel=EPSREL)
    thermal = unit.temperature > 0.0
    if omega > 0.0:
        total += _checked_quad(kernel, 0.0, lo, "PV near", epsabs=eps, epsrel=EPSREL)
        total += _semi_infinite(kernel, hi, unit.cutoff, +1, "PV right tail", unit)
        if thermal:
            total += _semi_infinite(kernel, 0.0, _negative_decay_length(unit), -1,
                                    "PV negative tail", unit)
    else:
        total += _semi_infinite(kernel, 0.0, unit.cutoff, +1, "PV right tail", unit)
        if thermal:
            total += _checked_quad(kernel, hi, 0.0, "PV near", epsabs=eps, epsrel=EPSREL)
            total += _semi_infinite(kernel, lo, _negative_decay_length(unit), -1,
                                    "PV negative tail", unit)
    return total


PV_STRATEGIES = {
    "pairing": _pv_pairing,
    "subtraction": _pv_subtraction,
    "cauchy": _pv_cauchy,
}


def lamb_shift_zero(bath: BathSpec) -> float:
    """S(0) = −∫₀^∞ J(ν)/ν dν = −λΩΓ(s)."""
    return -bath.lam * bath.cutoff * float(special.gamma(bath.s))


def lamb_shift(omega: float, bath: BathSpec, strategy: str = "pairing") -> float:
    """Principal-value Lamb shift S(ω) = P∫ J̃(ν)/(ω − ν) dν."""
    if strategy not in PV_STRATEGIES:
        raise InvalidParameterError("unknown PV strategy", {"strategy": strategy})
    if bath.lam == 0.0:
        return 0.0
    return bath.lam * _unit_lamb_shift(float(omega), _unit(bath), strategy)


@lru_cache(maxsize=4096)
def _unit_lamb_shift(omega: float, unit: BathSpec, strategy: str) -> float:
    if omega == 0.0:
        return lamb_shift_zero(unit)
    return PV_STRATEGIES[strategy](omega, unit)


# --- half-Fourier coefficients -----------------------------------------------

def half_fourier_gamma(omega: float, t: float, bath: BathSpec) -> Union[complex, type(Divergent)]:
    """Γ(ω, t) = ∫₀^t e^{iωs} C(s) ds; ``t = math.inf`` gives the asymptotic value."""
    if t < 0.0:
        raise InvalidParameterError("half_fourier_gamma needs t >= 0", {"t": t})
    if t == 0.0 or bath.lam == 0.0:
        return 0j
    unit = _unit(bath)
    if math.isinf(t):
        if omega == 0.0:
            rate = gamma_zero_limit(unit)
            if is_divergent(rate):
                return Divergent
            real = 0.25 * rate
        else:
            real = math.pi * thermal_spectrum(float(omega), unit)
        return bath.lam * complex(real, _unit_lamb_shift(float(omega), unit, "pairing"))
    return bath.lam * _unit_gamma_finite(float(omega), float(t), unit)


@lru_cache(maxsize=65536)
def _unit_gamma_finite(omega: float, t: float, unit: BathSpec) -> complex:
    """Finite-t coefficient with the time integral done analytically.

    Re Γ = ∫₀^∞ [J̃(ω+x) + J̃(ω−x)] sin(xt)/x dx,
    Im Γ = S(ω) + ∫₀^∞ [J̃(ω+x) − J̃(ω−x)] cos(xt)/x dx.
    """

    def spectrum(nu: float) -> float:
        return thermal_spectrum(nu, unit)

    def even(x: float) -> float:
        return (spectrum(omega + x) + spectrum(omega - x)) / x

    def odd(x: float) -> float:
        return (spectrum(omega + x) - spectrum(omega - x)) / x

    # the spectrum has a kink at ν = 0, i.e. at x = |ω|
    head = abs(omega) if omega != 0.0 else min(1.0, unit.cutoff)
    real = _oscillatory_integral(even, t, "sin", head, unit, "Re Γ(ω,t)")
    imag = _unit_lamb_shift(omega, unit, "pairing") + _oscillatory_integral(
        odd, t, "cos", head, unit, "Im Γ(ω,t)")
    return complex(real, imag)


def half_fourier_gamma_time_domain(omega: float, t: float, bath: BathSpec) -> complex:
    """Γ(ω, t) by direct time quadrature of e^{iωs} C(s); slow, used for validation."""
    if not 0.0 <= t < math.inf:
        raise InvalidParameterError("time-domain path needs finite t >= 0", {"t": t})
    if t == 0.0 or bath.lam == 0.0:
        return 0j

    def real(s: float) -> float:
        return (np.exp(1j * omega * s) * correlation_function(s, bath)).real

    def imag(s: float) -> float:
        return (np.exp(1j * omega * s) * correlation_function(s, bath)).imag

    eps = 1.0e-12 * bath.lam
    return complex(
        _checked_quad(real, 0.0, t, "time-domain Re Γ", epsabs=eps, epsrel=1.0e-8, limit=200),
        _checked_quad(imag, 0.0, t, "time-domain Im Γ", epsabs=eps, epsrel=1.0e-8, limit=200),
    )


def lamb_shift_delta(bath: BathSpec, omega0: float = 1.0) -> Tuple[float, float]:
    """Lamb-shift combinations Δ₁ = 2[S(ω₀) − S(−ω₀)], Δ₂ = 2[S(ω₀) + S(−ω₀)].

    These are the combinations to which the Bloch-Redfield steady state
    reduces (see steady.v1_closed_form).
    """
    if not omega0 > 0.0:
        raise InvalidParameterError("omega0 must be > 0", {"omega0": omega0})
    plus = lamb_shift(omega0, bath)
    minus = lamb_shift(-omega0, bath)
    return 2.0 * (plus - minus), 2.0 * (plus + minus)


def redfield_coefficients(bath: BathSpec, omega0: float = 1.0,
                          t: float = math.inf) -> RedfieldCoefficients:
    """Assemble rates and Lamb shifts at ±ω₀ and 0 at time ``t``."""
    if not omega0 > 0.0:
        raise InvalidParameterError("omega0 must be > 0", {"omega0": omega0})
    plus = half_fourier_gamma(omega0, t, bath)
    minus = half_fourier_gamma(-omega0, t, bath)
    zero = half_fourier_gamma(0.0, t, bath)
    if is_divergent(zero):
        gamma_zero, shift_zero = Divergent, lamb_shift_zero(bath)
    else:
        gamma_zero, shift_zero = 4.0 * zero.real, zero.imag
    return RedfieldCoefficients(
        gamma_plus=2.0 * plus.real,
        gamma_minus=2.0 * minus.real,
        gamma_zero=gamma_zero,
        shift_plus=plus.imag,
        shift_minus=minus.imag,
        shift_zero=shift_zero,
        delta1=2.0 * (plus.imag - minus.imag),
        delta2=2.0 * (plus.imag + minus.imag),
        time=t,
    )
