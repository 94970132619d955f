import math

import numpy as np
import pytest

from src.bath import BathSpec, gamma_zero_limit, redfield_coefficients
from src.errors import InvalidParameterError, NotTracePreservingError
from src.positivity import (
    gks_decompose, kossakowski_negativity, kossakowski_negativity_scaling,
    negativity_from_eigenvalues, rebuild_superoperator, state_negativity,
)
from src.redfield import (
    IDENTITY, SIGMA_Z, GeneratorMode, SystemSpec, bloch_to_superoperator, generator_for,
    sandwich,
)


def _expected_kossakowski(system, bath):
    """2(xαᵀ + αx†) with X = Σ Γ(ω)A(ω) and the coupling operator α·σ."""
    c = redfield_coefficients(bath)
    f1, f2 = system.f1, system.f2
    lowering = f1 * np.array([0.5, -0.5j, 0.0])
    raising = f1 * np.array([0.5, 0.5j, 0.0])
    dephasing = f2 * np.array([0.0, 0.0, 1.0])
    x = c.gamma(1) * lowering + c.gamma(-1) * raising + c.gamma(0) * dephasing
    alpha = np.array([f1, 0.0, f2])
    return 2.0 * (np.outer(x, alpha) + np.outer(alpha, x.conj()))


class TestGKSDecomposition:
    def test_matches_redfield_structure(self, ohmic_bath):
        system = SystemSpec(0.8, 0.6)
        data = gks_decompose(generator_for(system, ohmic_bath))
        np.testing.assert_allclose(data.A, _expected_kossakowski(system, ohmic_bath), atol=1e-12)

    def test_pure_dephasing(self, ohmic_bath):
        data = gks_decompose(generator_for(SystemSpec(0.0, 1.0), ohmic_bath))
        expected = np.diag([0.0, 0.0, gamma_zero_limit(ohmic_bath)])
        np.testing.assert_allclose(data.A, expected, atol=1e-12)
        assert data.negativity <= 1e-14

    def test_davies_generator_is_lindblad(self, ohmic_bath, system):
        data = gks_decompose(generator_for(system, ohmic_bath, GeneratorMode.SECULAR))
        assert data.negativity <= 1e-12
        assert data.is_lindblad

    def test_full_redfield_generator_is_not_lindblad(self, ohmic_bath, system):
        data = gks_decompose(generator_for(system, ohmic_bath))
        assert data.negativity > 0.0
        assert not data.is_lindblad
        assert np.min(data.eigenvalues) < 0.0

    def test_counter_rotating_pairs_alone_break_positivity(self, ohmic_bath):
        # f2 = 0: the nonsecular generator keeps the ±2ω₀ pairs
        assert kossakowski_negativity(SystemSpec(1.0, 0.0), ohmic_bath) > 0.0
        assert kossakowski_negativity(SystemSpec(1.0, 0.0), ohmic_bath,
                                      GeneratorMode.PARTIAL) <= 1e-14

    def test_eigenvalues_sum_to_trace(self, ohmic_bath, system):
        data = gks_decompose(generator_for(system, ohmic_bath))
        assert np.sum(data.eigenvalues) == pytest.approx(np.trace(data.A).real, rel=1e-12)
        np.testing.assert_allclose(data.A, data.A.conj().T, atol=1e-15)

    @pytest.mark.parametrize("mode", list(GeneratorMode))
    def test_round_trip(self, ohmic_bath, system, mode):
        gen = generator_for(system, ohmic_bath, mode)
        superop = bloch_to_superoperator(gen.M, gen.b)
        rebuilt = rebuild_superoperator(gks_decompose(gen))
        np.testing.assert_allclose(rebuilt, superop, atol=1e-12)

    def test_lamb_hamiltonian_is_hermitian(self, ohmic_bath, system):
        H = gks_decompose(generator_for(system, ohmic_bath)).lamb_hamiltonian
        np.testing.assert_allclose(H, H.conj().T, atol=1e-14)

    def test_decoupled_bath_has_no_dissipator(self, system):
        data = gks_decompose(generator_for(system, BathSpec(lam=0.0)))
        np.testing.assert_allclose(data.A, np.zeros((3, 3)), atol=1e-15)
        np.testing.assert_allclose(data.lamb_hamiltonian, np.zeros((2, 2)), atol=1e-15)

    def test_accepts_raw_superoperator(self, ohmic_bath, system):
        gen = generator_for(system, ohmic_bath)
        raw = gks_decompose(bloch_to_superoperator(gen.M, gen.b), omega0=1.0)
        assert raw.negativity == pytest.approx(gks_decompose(gen).negativity, rel=1e-12)

    def test_rejects_wrong_shape(self):
        with pytest.raises(InvalidParameterError):
            gks_decompose(np.eye(3))

    def test_rejects_trace_breaking_superoperator(self):
        with pytest.raises(NotTracePreservingError):
            gks_decompose(sandwich(SIGMA_Z, IDENTITY))

    def test_negativity_is_basis_independent(self, ohmic_bath, system):
        A = gks_decompose(generator_for(system, ohmic_bath)).A
        rng = np.random.default_rng(11)
        U, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
        rotated = np.linalg.eigvalsh(U @ A @ U.conj().T)
        assert negativity_from_eigenvalues(rotated) == pytest.approx(
            negativity_from_eigenvalues(np.linalg.eigvalsh(A)), rel=1e-10)


class TestNegativityScaling:
    def test_linear_in_lambda(self, ohmic_bath, system):
        report = kossakowski_negativity_scaling(system, ohmic_bath,
                                                np.geomspace(1.0e-6, 1.0e-3, 7))
        assert report.spread < 1e-8
        assert report.slope == pytest.approx(1.0, abs=1e-6)
        assert report.linear is True

    def test_vanishes_without_cross_coupling(self, ohmic_bath):
        report = kossakowski_negativity_scaling(SystemSpec(1.0, 0.0), ohmic_bath,
                                                [1.0e-4, 1.0e-3], GeneratorMode.PARTIAL)
        assert np.max(report.values) <= 1e-14

    def test_needs_two_points(self, ohmic_bath, system):
        with pytest.raises(InvalidParameterError):
            kossakowski_negativity_scaling(system, ohmic_bath, [1.0e-3])


class TestStateNegativity:
    def test_inside_ball(self):
        assert state_negativity([0.0, 0.0, -0.5]) == 0.0
        assert state_negativity([0.0, 0.0, 1.0]) == 0.0

    def test_outside_ball(self):
        assert state_negativity([0.0, 0.0, -1.2]) == pytest.approx(0.1)

    def test_matches_density_matrix_spectrum(self):
        v = np.array([0.6, 0.3, -0.9])
        rho = 0.5 * np.array([[1.0 + v[2], v[0] - 1j * v[1]], [v[0] + 1j * v[1], 1.0 - v[2]]])
        smallest = np.min(np.linalg.eigvalsh(rho))
        assert state_negativity(v) == pytest.approx(-smallest, rel=1e-12)
        assert math.isclose(np.linalg.norm(v), 1.0 + 2.0 * state_negativity(v))
