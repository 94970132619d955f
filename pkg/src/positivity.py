"""Complete-positivity diagnostics of qubit generators.

A trace- and Hermiticity-preserving generator is written in GKS form

    ℒρ = −i[H_eff, ρ] + Σ_kl A_kl (F_k ρ F_l − ½{F_l F_k, ρ}),  F_k = σ_k/√2,

and is completely positive iff the Kossakowski matrix A is positive
semidefinite. The negativity 𝒩_K sums the magnitudes of its negative
eigenvalues.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from src.bath import BathSpec
from src.errors import InvalidParameterError
from src.logger import AnalysisLogger
from src.redfield import (
    IDENTITY, PAULI_BASIS, SIGMA_Z, BlochGenerator, GeneratorMode, SystemSpec,
    bloch_to_superoperator, check_trace_and_hermiticity, commutator_superoperator,
    generator_for, sandwich,
)
from src.steady import ScalingReport, linearity_check, scaling_report

logger = AnalysisLogger("positivity")

ORTHONORMAL_BASIS = tuple(sigma / math.sqrt(2.0) for sigma in PAULI_BASIS)
HERMITICITY_TOLERANCE = 1.0e-12


@dataclass(frozen=True)
class KossakowskiData:
    A: np.ndarray
    eigenvalues: np.ndarray
    negativity: float
    lamb_hamiltonian: np.ndarray
    omega0: float = 1.0

    @property
    def is_lindblad(self) -> bool:
        scale = max(float(np.max(np.abs(self.eigenvalues))), 1.0e-300)
        return self.negativity <= HERMITICITY_TOLERANCE * scale


def negativity_from_eigenvalues(eigenvalues: np.ndarray) -> float:
    return float(np.sum(np.abs(eigenvalues) - eigenvalues) / 2.0)


def _coefficients(superop: np.ndarray) -> np.ndarray:
    """c_ij with ℒρ = Σ_ij c_ij G_i ρ G_j† over G = (I, σx, σy, σz)/√2."""
    c = np.empty((4, 4), dtype=complex)
    for i, g_i in enumerate(ORTHONORMAL_BASIS):
        for j, g_j in enumerate(ORTHONORMAL_BASIS):
            c[i, j] = np.vdot(sandwich(g_i, g_j.conj().T), superop)
    return c


def gks_decompose(gen: Union[BlochGenerator, np.ndarray],
                  omega0: Optional[float] = None) -> KossakowskiData:
    """Split a generator into its Kossakowski matrix and Lamb Hamiltonian.

    ``gen`` is a BlochGenerator or a 4×4 superoperator on column-stacked
    density matrices. The Lamb Hamiltonian is H_eff − (ω₀/2)σz, with ω₀ taken
    from the generator unless given.
    """
    if isinstance(gen, BlochGenerator):
        superop = bloch_to_superoperator(gen.M, gen.b)
        omega0 = gen.omega0 if omega0 is None else omega0
    else:
        superop = np.asarray(gen, dtype=complex)
        if superop.shape != (4, 4):
            raise InvalidParameterError("expected a 4x4 superoperator",
                                        {"shape": superop.shape})
        omega0 = 1.0 if omega0 is None else omega0
    check_trace_and_hermiticity(superop)

    c = _coefficients(superop)
    A = c[1:, 1:]
    asymmetry = float(np.max(np.abs(A - A.conj().T)))
    if asymmetry > HERMITICITY_TOLERANCE * max(1.0, float(np.max(np.abs(A)))):
        logger.warning("Kossakowski matrix is not Hermitian", residual=asymmetry)
    A = 0.5 * (A + A.conj().T)

    shift = sum(c[k, 0] * ORTHONORMAL_BASIS[k] for k in range(1, 4)) / math.sqrt(2.0)
    C = shift + 0.25 * c[0, 0] * IDENTITY
    h_eff = 0.5j * (C - C.conj().T)

    eigenvalues = np.linalg.eigvalsh(A)
    negativity = negativity_from_eigenvalues(eigenvalues)
    logger.log_numerical_event("gks decomposition", negativity=negativity)
    return KossakowskiData(A=A, eigenvalues=eigenvalues, negativity=negativity,
                           lamb_hamiltonian=h_eff - 0.5 * omega0 * SIGMA_Z, omega0=omega0)


def rebuild_superoperator(data: KossakowskiData) -> np.ndarray:
    """Generator from (H_S + Lamb Hamiltonian, A); inverse of gks_decompose."""
    hamiltonian = 0.5 * data.omega0 * SIGMA_Z + data.lamb_hamiltonian
    superop = commutator_superoperator(hamiltonian)
    F = ORTHONORMAL_BASIS
    for k in range(1, 4):
        for l in range(1, 4):
            product = F[l] @ F[k]
            superop = superop + data.A[k - 1, l - 1] * (
                sandwich(F[k], F[l])
                - 0.5 * sandwich(product, IDENTITY)
                - 0.5 * sandwich(IDENTITY, product))
    return superop


def kossakowski_negativity(system: SystemSpec, bath: BathSpec,
                           mode: GeneratorMode = GeneratorMode.NONSECULAR,
                           t: float = math.inf) -> float:
    return gks_decompose(generator_for(system, bath, mode, t)).negativity


def kossakowski_negativity_scaling(system: SystemSpec, bath: BathSpec,
                                   lambdas: Sequence[float],
                                   mode: GeneratorMode = GeneratorMode.NONSECULAR) -> ScalingReport:
    """𝒩_K(λ)/λ along ``lambdas``.

    ``linear`` on the report holds the check that 𝒩_K/λ varies by less than
    1% over the points with λ ≤ 1e-3.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size < 2:
        raise InvalidParameterError("scaling needs at least two lambda values",
                                    {"points": int(lambdas.size)})
    values = [kossakowski_negativity(system, bath.with_lambda(lam), mode) for lam in lambdas]
    report = linearity_check(scaling_report(lambdas, values))
    if report.linear is False:
        logger.warning("Negativity is not linear in lambda", spread=report.spread)
    return report


def state_negativity(v: Sequence[float]) -> float:
    """Magnitude of the negative eigenvalue of ρ = (I + v·σ)/2, i.e. max(0, (|v| − 1)/2)."""
    return max(0.0, (float(np.linalg.norm(np.asarray(v, dtype=float))) - 1.0) / 2.0)
