"""Bloch-Redfield generator of a two-level system with composite coupling.

The system Hamiltonian is H_S = (ω₀/2)σz and the coupling operator is
A = f₁σx + f₂σz. The generator is assembled as a superoperator acting on
column-stacked density matrices and reduced to the affine Bloch flow
v̇ = M v + b with v_i = ⟨σ_i⟩ and ρ = (I + v·σ)/2.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

import numpy as np

from src.bath import BathSpec, RedfieldCoefficients, redfield_coefficients
from src.errors import (
    InvalidParameterError, NonUniqueSteadyStateError,
    NotHermiticityPreservingError, NotTracePreservingError,
)
from src.logger import AnalysisLogger

logger = AnalysisLogger("redfield")

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
PAULI_BASIS = (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z)

STRONG_WEIGHT = 3.0
STRUCTURE_TOLERANCE = 1.0e-12


class GeneratorMode(str, Enum):
    """Which frequency pairs (ω, ω′) of the Redfield sum are kept."""
    NONSECULAR = "nonsecular"
    PARTIAL = "partial"
    SECULAR = "secular"

    def keeps(self, first: int, second: int) -> bool:
        if self is GeneratorMode.NONSECULAR:
            return True
        if self is GeneratorMode.SECULAR:
            return first == second
        # drop only the counter-rotating ±2ω₀ pairs
        return first == second or first * second == 0


@dataclass(frozen=True)
class SystemSpec:
    """Two-level system: gap ω₀ and weights of the σx (f1) and σz (f2) channels."""
    f1: float = 1.0
    f2: float = 1.0
    omega0: float = 1.0

    def __post_init__(self):
        if not self.omega0 > 0.0:
            raise InvalidParameterError("omega0 must be > 0", {"omega0": self.omega0})
        if not (self.f1 >= 0.0 and self.f2 >= 0.0):
            raise InvalidParameterError("f1, f2 must be >= 0", {"f1": self.f1, "f2": self.f2})

    @property
    def weak_coupling(self) -> bool:
        """False when a channel weight leaves the f ~ O(1) regime."""
        return self.f1 <= STRONG_WEIGHT and self.f2 <= STRONG_WEIGHT

    @property
    def hamiltonian(self) -> np.ndarray:
        return 0.5 * self.omega0 * SIGMA_Z

    @property
    def coupling_operator(self) -> np.ndarray:
        return self.f1 * SIGMA_X + self.f2 * SIGMA_Z


@dataclass(frozen=True)
class Channel:
    """Eigenoperator A(ω) of the coupling; ``sign`` is +1, -1 or 0 (ω = sign·ω₀)."""
    sign: int
    frequency: float
    operator: np.ndarray


@dataclass(frozen=True)
class BlochGenerator:
    """Affine Bloch flow v̇ = M v + b."""
    M: np.ndarray
    b: np.ndarray
    mode: GeneratorMode
    coefficient_time: float = math.inf
    omega0: float = 1.0
    infinite_dephasing: bool = False

    def __post_init__(self):
        for array in (self.M, self.b):
            array.setflags(write=False)

    @property
    def hamiltonian(self) -> np.ndarray:
        return 0.5 * self.omega0 * SIGMA_Z

    def rhs(self, v: np.ndarray) -> np.ndarray:
        return self.M @ v + self.b


def eigenoperator_decomposition(system: SystemSpec) -> List[Channel]:
    """Split A = f₁σx + f₂σz into eigenoperators of H_S: f₁σ₋ at +ω₀, f₁σ₊ at −ω₀, f₂σz at 0."""
    return [
        Channel(+1, system.omega0, system.f1 * SIGMA_MINUS),
        Channel(-1, -system.omega0, system.f1 * SIGMA_PLUS),
        Channel(0, 0.0, system.f2 * SIGMA_Z),
    ]


def vec(matrix: np.ndarray) -> np.ndarray:
    return np.asarray(matrix).flatten(order="F")


def unvec(vector: np.ndarray) -> np.ndarray:
    return np.asarray(vector).reshape((2, 2), order="F")


def sandwich(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Superoperator of ρ ↦ left·ρ·right on column-stacked vectors."""
    return np.kron(right.T, left)


def commutator_superoperator(hamiltonian: np.ndarray) -> np.ndarray:
    """Superoperator of ρ ↦ −i[H, ρ]."""
    return -1j * (sandwich(hamiltonian, IDENTITY) - sandwich(IDENTITY, hamiltonian))


def build_superoperator(system: SystemSpec, coeffs: RedfieldCoefficients,
                        mode: GeneratorMode = GeneratorMode.NONSECULAR) -> np.ndarray:
    """ρ̇ = −i[H_S,ρ] + Σ_{ω,ω′} Γ(ω)[A(ω)ρA(ω′)† − A(ω′)†A(ω)ρ] + h.c. as a 4×4 matrix.

    A divergent γ₁ enters with its finite part set to zero; callers tag the
    generator instead (see build_generator).
    """
    mode = GeneratorMode(mode)
    superop = commutator_superoperator(system.hamiltonian)
    channels = eigenoperator_decomposition(system)
    for first in channels:
        gamma = coeffs.gamma(first.sign)
        p = first.operator
        for second in channels:
            if not mode.keeps(first.sign, second.sign):
                continue
            q = second.operator.conj().T
            term = gamma * (sandwich(p, q) - sandwich(q @ p, IDENTITY))
            hermitian_conjugate = np.conj(gamma) * (
                sandwich(q.conj().T, p.conj().T) - sandwich(IDENTITY, p.conj().T @ q.conj().T))
            superop = superop + term + hermitian_conjugate
    return superop


def pauli_transfer_matrix(superop: np.ndarray) -> np.ndarray:
    """R_μν = Tr(σ_μ ℒ(σ_ν))/2 in the basis (I, σx, σy, σz)."""
    transfer = np.empty((4, 4), dtype=complex)
    for nu, sigma_nu in enumerate(PAULI_BASIS):
        image = unvec(superop @ vec(sigma_nu))
        for mu, sigma_mu in enumerate(PAULI_BASIS):
            transfer[mu, nu] = 0.5 * np.trace(sigma_mu @ image)
    return transfer


def check_trace_and_hermiticity(superop: np.ndarray,
                                tolerance: float = STRUCTURE_TOLERANCE) -> np.ndarray:
    """Return the real Pauli transfer matrix, raising when ℒ breaks trace or Hermiticity."""
    transfer = pauli_transfer_matrix(superop)
    scale = max(1.0, float(np.max(np.abs(transfer))))
    names = ("I", "sigma_x", "sigma_y", "sigma_z")
    for nu in range(4):
        if abs(transfer[0, nu]) > tolerance * scale:
            raise NotTracePreservingError(
                "superoperator changes the trace",
                {"basis_element": names[nu], "residual": float(abs(transfer[0, nu]))})
    imaginary = np.abs(transfer.imag)
    if np.max(imaginary) > tolerance * scale:
        mu, nu = np.unravel_index(int(np.argmax(imaginary)), imaginary.shape)
        raise NotHermiticityPreservingError(
            "superoperator maps a Hermitian operator to a non-Hermitian one",
            {"basis_element": names[nu], "residual": float(imaginary[mu, nu])})
    return transfer.real


def superoperator_to_bloch(superop: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Bloch (M, b) of a trace- and Hermiticity-preserving superoperator."""
    transfer = check_trace_and_hermiticity(superop)
    return transfer[1:, 1:].copy(), transfer[1:, 0].copy()


def bloch_to_superoperator(M: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Inverse of superoperator_to_bloch: ℒ(I) = b·σ, ℒ(σ_j) = Σ_i M_ij σ_i."""
    transfer = np.zeros((4, 4))
    transfer[1:, 0] = b
    transfer[1:, 1:] = M
    superop = np.zeros((4, 4), dtype=complex)
    for mu, sigma_mu in enumerate(PAULI_BASIS):
        for nu, sigma_nu in enumerate(PAULI_BASIS):
            if transfer[mu, nu] != 0.0:
                superop += 0.5 * transfer[mu, nu] * np.outer(vec(sigma_mu), vec(sigma_nu).conj())
    return superop


def build_generator(system: SystemSpec, coeffs: RedfieldCoefficients,
                    mode: GeneratorMode = GeneratorMode.NONSECULAR) -> BlochGenerator:
    """Assemble the Bloch form of the Redfield generator.

    With a divergent γ₁ and f₂ > 0 the generator is tagged InfiniteDephasing:
    its transverse components are pinned to zero at steady state.
    """
    mode = GeneratorMode(mode)
    M, b = superoperator_to_bloch(build_superoperator(system, coeffs, mode))
    infinite = coeffs.dephasing_divergent and system.f2 > 0.0
    if infinite:
        logger.debug("Divergent dephasing rate; tagging generator", f2=system.f2)
    return BlochGenerator(M=M, b=b, mode=mode, coefficient_time=coeffs.time,
                          omega0=system.omega0, infinite_dephasing=infinite)


def generator_for(system: SystemSpec, bath: BathSpec,
                  mode: GeneratorMode = GeneratorMode.NONSECULAR,
                  t: float = math.inf) -> BlochGenerator:
    """build_generator with coefficients computed from ``bath`` at time ``t``."""
    return build_generator(system, redfield_coefficients(bath, system.omega0, t), mode)


def secular_steady_state(system: SystemSpec, bath: BathSpec) -> np.ndarray:
    """Gibbs state of H_S, the fixed point of the Davies generator."""
    if system.f1 == 0.0:
        raise NonUniqueSteadyStateError(
            "populations are not relaxed without the sigma_x channel", {"f1": system.f1})
    if bath.temperature == 0.0:
        return np.array([0.0, 0.0, -1.0])
    return np.array([0.0, 0.0, -math.tanh(system.omega0 / (2.0 * bath.temperature))])
