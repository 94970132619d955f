import math

import numpy as np
import pytest

from src import steady
from src.bath import BathSpec
from src.errors import DenominatorZeroError, Flag, NonUniqueSteadyStateError
from src.redfield import GeneratorMode, SystemSpec, generator_for
from src.steady import (
    CLOSED_FORM, LEADING_ORDER, coherence_scaling, dephasing_ratio, linearity_check,
    log_log_slope, scaling_report, solve_steady, steady_state, v1_closed_form, v1_leading_order,
)

GRID = [(lam, temperature, s)
        for lam in (1.0e-4, 1.0e-3, 1.0e-2)
        for temperature in (0.5, 1.0, 2.0)
        for s in (1.0, 3.0)]


class TestLinearSolve:
    def test_secular_fixed_point_is_gibbs(self, ohmic_bath, system):
        state = steady_state(system, ohmic_bath, GeneratorMode.SECULAR)
        np.testing.assert_allclose(state.vector, [0.0, 0.0, -math.tanh(0.5)], atol=1e-12)
        assert state.coherence == 0.0 or state.coherence < 1e-12

    @pytest.mark.parametrize("lam,temperature,s", GRID)
    def test_nonsecular_v2_vanishes(self, lam, temperature, s):
        bath = BathSpec(lam=lam, s=s, cutoff=10.0, temperature=temperature)
        state = steady_state(SystemSpec(1.0, 1.0), bath)
        assert abs(state.v2) <= 1e-10

    def test_no_sigma_z_channel_means_no_coherence(self, ohmic_bath):
        state = steady_state(SystemSpec(f1=1.0, f2=0.0), ohmic_bath)
        assert state.coherence == 0.0

    def test_pure_dephasing_is_not_unique(self, ohmic_bath):
        with pytest.raises(NonUniqueSteadyStateError):
            steady_state(SystemSpec(f1=0.0, f2=1.0), ohmic_bath)

    def test_infinite_dephasing_pins_transverse_components(self, sub_ohmic_bath, system):
        state = solve_steady(generator_for(system, sub_ohmic_bath))
        assert state.v1 == 0.0 and state.v2 == 0.0
        assert Flag.INFINITE_DEPHASING in state.flags

    def test_weak_coupling_flag_is_attached(self, system):
        state = steady_state(system, BathSpec(lam=0.2))
        assert Flag.WEAK_COUPLING_WARNING in state.flags

    def test_fixed_point_is_physical_at_moderate_temperature(self, ohmic_bath, system):
        assert steady_state(system, ohmic_bath).physical


class TestClosedForm:
    @pytest.mark.parametrize("lam,temperature,s", GRID)
    def test_matches_linear_solve(self, lam, temperature, s):
        bath = BathSpec(lam=lam, s=s, cutoff=10.0, temperature=temperature)
        system = SystemSpec(1.0, 1.0)
        closed = v1_closed_form(system, bath)
        solved = steady_state(system, bath)
        assert closed.method == CLOSED_FORM
        assert closed.v1 == pytest.approx(solved.v1, rel=1e-8, abs=1e-14)
        assert closed.v3 == pytest.approx(solved.v3, rel=1e-8)

    @pytest.mark.parametrize("f1,f2", [(0.0, 1.0), (1.0, 0.0), (0.0, 0.0)])
    def test_vanishes_without_both_channels(self, ohmic_bath, f1, f2):
        assert v1_closed_form(SystemSpec(f1, f2), ohmic_bath).v1 == 0.0

    def test_pure_dephasing_keeps_gibbs_population(self, ohmic_bath):
        state = v1_closed_form(SystemSpec(0.0, 1.0), ohmic_bath)
        assert state.v3 == pytest.approx(-math.tanh(0.5))
        assert Flag.SINGULAR_GENERATOR in state.flags

    def test_sub_ohmic_bath_has_no_coherence(self, sub_ohmic_bath, system):
        state = v1_closed_form(system, sub_ohmic_bath)
        assert state.coherence == 0.0
        assert state.v3 == pytest.approx(-math.tanh(0.5))
        assert Flag.SUB_OHMIC in state.flags
        assert Flag.INFINITE_DEPHASING in state.flags

    def test_super_ohmic_is_marked_as_model_assumption(self, super_ohmic_bath, system):
        assert Flag.MODEL_ASSUMPTION in v1_closed_form(system, super_ohmic_bath).flags

    def test_vanishing_denominator_raises(self, ohmic_bath, system, monkeypatch):
        monkeypatch.setattr(steady, "closed_form_denominator", lambda *args: 0.0)
        with pytest.raises(DenominatorZeroError) as excinfo:
            v1_closed_form(system, ohmic_bath)
        assert excinfo.value.diagnostics["denominator"] == 0.0

    def test_dephasing_ratio(self, ohmic_bath, super_ohmic_bath, system):
        from src.bath import j_eff
        assert dephasing_ratio(system, ohmic_bath) == pytest.approx(
            2.0 * 0.01 * 1.0 / j_eff(1.0, ohmic_bath), rel=1e-12)
        assert dephasing_ratio(system, super_ohmic_bath) == 0.0

    def test_depends_on_weights_only_through_product_at_leading_order(self, ohmic_bath):
        balanced = v1_leading_order(SystemSpec(1.0, 1.0), ohmic_bath)
        skewed = v1_leading_order(SystemSpec(2.0, 0.5), ohmic_bath)
        assert skewed.v1 == pytest.approx(balanced.v1, rel=1e-12)

    def test_coherence_grows_with_weights(self, ohmic_bath):
        weights = np.linspace(0.1, 1.0, 10)
        for f2 in weights:
            values = [v1_closed_form(SystemSpec(f1, f2), ohmic_bath).coherence for f1 in weights]
            assert np.all(np.diff(values) >= 0.0)

    def test_high_temperature_tail_vanishes(self, system):
        warm = v1_closed_form(system, BathSpec(lam=0.01, temperature=1.0)).coherence
        hot = v1_closed_form(system, BathSpec(lam=0.01, temperature=1.0e3)).coherence
        assert hot < 0.01 * warm

    def test_low_temperature_state_leaves_bloch_ball(self, system):
        state = v1_closed_form(system, BathSpec(lam=0.01, temperature=0.02))
        assert not state.physical

    def test_bloch_ball_exit_lies_between_t_026_and_027(self, system):
        # |v| is about 1.0023 at T = 0.26 and 0.9967 at T = 0.27
        cold = steady_state(system, BathSpec(lam=0.01, temperature=0.26))
        warm = steady_state(system, BathSpec(lam=0.01, temperature=0.27))
        assert cold.norm > 1.001 and warm.norm < 0.999
        assert not cold.physical and warm.physical


class TestLeadingOrder:
    def test_is_linear_in_lambda(self, ohmic_bath, system):
        lambdas = np.geomspace(1.0e-6, 1.0e-4, 5)
        ratios = [v1_leading_order(system, ohmic_bath.with_lambda(lam)).v1 / lam
                  for lam in lambdas]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)
        assert v1_leading_order(system, ohmic_bath).method == LEADING_ORDER

    def test_truncation_error_is_second_order(self, ohmic_bath, system):
        lambdas = np.geomspace(1.0e-5, 1.0e-3, 5)
        errors = []
        for lam in lambdas:
            bath = ohmic_bath.with_lambda(lam)
            errors.append(v1_closed_form(system, bath).v1 - v1_leading_order(system, bath).v1)
        assert log_log_slope(lambdas, errors) == pytest.approx(2.0, abs=0.05)


class TestScaling:
    def test_coherence_is_linear_in_lambda(self, ohmic_bath, system):
        report = coherence_scaling(system, ohmic_bath, np.geomspace(1.0e-6, 1.0e-4, 5))
        assert report.slope == pytest.approx(1.0, abs=0.01)
        assert report.spread < 0.01
        assert report.linear is True

    def test_vanishing_coherence_is_reported(self, ohmic_bath):
        report = coherence_scaling(SystemSpec(1.0, 0.0), ohmic_bath, [1.0e-5, 1.0e-4])
        assert report.vanishes
        assert report.slope is None
        assert report.linear is None

    def test_linearity_check_flags_a_bent_curve(self):
        bent = linearity_check(scaling_report([1.0e-5, 1.0e-4, 1.0e-3], [1.0e-5, 1.0e-4, 2.0e-3]))
        assert bent.linear is False
        straight = linearity_check(scaling_report([1.0e-5, 1.0e-4], [2.0e-5, 2.0e-4]))
        assert straight.linear is True

    def test_linearity_needs_two_points_in_the_window(self):
        report = linearity_check(scaling_report([1.0e-3, 1.0e-2], [1.0e-3, 1.0e-2]), 1.0e-4)
        assert report.linear is None

    def test_log_log_slope_needs_two_nonzero_points(self):
        assert log_log_slope([1.0, 2.0], [0.0, 1.0]) is None
        assert log_log_slope([1.0, 10.0], [3.0, 300.0]) == pytest.approx(2.0)
