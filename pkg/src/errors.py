"""Exception types and marker values shared by the analysis modules."""

from typing import Any, Dict, Optional


class SSCError(Exception):
    """Base class for every error raised by the analysis package."""

    exit_code = 3

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InvalidParameterError(SSCError, ValueError):
    """A parameter lies outside the domain of an operation."""

    exit_code = 2


class NumericalError(SSCError):
    """A numerical routine failed to reach its tolerance."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge."""


class SingularGeneratorError(NumericalError):
    """The Bloch matrix has no unique fixed point."""


class NonUniqueSteadyStateError(SingularGeneratorError):
    """Populations are not relaxed, so every diagonal state is stationary."""


class NotTracePreservingError(NumericalError):
    """A superoperator maps some operator to one with nonzero trace change."""


class NotHermiticityPreservingError(NumericalError):
    """A superoperator maps a Hermitian operator to a non-Hermitian one."""


class DenominatorZeroError(NumericalError):
    """The closed-form coherence denominator vanishes."""


class AllPointsFlaggedError(NumericalError):
    """Every candidate of an optimization box carries an exclusion flag."""


class StepSizeUnderflowError(NumericalError):
    """The ODE integrator could not take a step above machine resolution."""


class CoefficientCacheError(NumericalError):
    """The finite-time coefficient table could not be built."""


class _DivergentType:
    """Marker for a rate that is infinite in the asymptotic limit."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Divergent"

    def __str__(self) -> str:
        return "Divergent"

    def __reduce__(self):
        return (_DivergentType, ())


Divergent = _DivergentType()


def is_divergent(value: Any) -> bool:
    """Return True when ``value`` is the Divergent marker."""
    return value is Divergent


class Flag:
    """String flags carried by sweep records."""

    DENOMINATOR_ZERO = "DenominatorZero"
    SUB_OHMIC = "SubOhmic"
    INFINITE_DEPHASING = "InfiniteDephasing"
    WEAK_COUPLING_WARNING = "WeakCouplingWarning"
    SINGULAR_GENERATOR = "SingularGenerator"
    NUMERICAL_FAILURE = "NumericalFailure"
    MODEL_ASSUMPTION = "ModelAssumption"
    NO_DEPHASING_TERM = "NoDephasingTerm"
