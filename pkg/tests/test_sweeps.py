import numpy as np
import pytest

from src import sweeps
from src.errors import AllPointsFlaggedError, Flag, InvalidParameterError
from src.redfield import SystemSpec
from src.bath import BathSpec
from src.steady import closed_form_denominator
from src.sweeps import SweepOrchestrator, _sign_changes, evaluate_point, make_point


@pytest.fixture
def small_config(config):
    config.set("sweep.lambda_min", 1.0e-6)
    config.set("sweep.lambda_max", 1.0e-4)
    config.set("sweep.lambda_points", 5)
    config.set("sweep.temperature_min", 0.02)
    config.set("sweep.temperature_max", 0.1)
    config.set("sweep.temperature_points", 3)
    config.set("optimize.grid_points", 5)
    return config


class TestEvaluatePoint:
    def test_overrides(self, config):
        point = make_point(config, lam=0.05, f2=0.0)
        assert point["lam"] == 0.05 and point["f2"] == 0.0 and point["f1"] == 1.0

    def test_regular_point(self, config):
        record = evaluate_point(make_point(config))
        assert record.coherence > 0.0
        assert record.negativity_k > 0.0
        assert record.flags == ()

    def test_pure_dephasing_is_flagged_not_raised(self, config):
        record = evaluate_point(make_point(config, f1=0.0))
        assert record.failed
        assert record.has_flag(Flag.SINGULAR_GENERATOR)
        assert record.to_row()["coherence"] == Flag.SINGULAR_GENERATOR

    def test_sub_ohmic_point(self, config):
        record = evaluate_point(make_point(config, s=0.5))
        assert record.coherence == 0.0
        assert record.has_flag(Flag.SUB_OHMIC)

    def test_super_ohmic_point_has_no_dephasing_term(self, config):
        assert evaluate_point(make_point(config, s=3.0)).has_flag(Flag.NO_DEPHASING_TERM)

    def test_strong_coupling_is_warned(self, config):
        assert evaluate_point(make_point(config, lam=0.2)).has_flag(Flag.WEAK_COUPLING_WARNING)

    def test_invalid_parameters_are_flagged(self, config):
        record = evaluate_point(make_point(config, lam=-1.0))
        assert record.has_flag(Flag.NUMERICAL_FAILURE)
        assert record.error_message


class TestLambdaSweep:
    def test_slopes_are_linear(self, small_config):
        result = SweepOrchestrator(small_config).sweep_lambda()
        assert [r.lam for r in result.records] == pytest.approx(list(np.geomspace(1e-6, 1e-4, 5)))
        assert result.metadata["coherence_slope"] == pytest.approx(1.0, abs=0.01)
        assert result.metadata["negativity_slope"] == pytest.approx(1.0, abs=0.01)
        assert result.metadata["coherence_linear"] is True
        assert result.metadata["negativity_linear"] is True

    def test_no_cross_coupling_gives_nothing(self, small_config):
        result = SweepOrchestrator(small_config).sweep_lambda(f2=0.0, mode="partial")
        for record in result.records:
            assert record.coherence == 0.0
            assert record.negativity_k <= 1e-14
        assert result.metadata["coherence_slope"] is None

    def test_parallel_run_is_deterministic(self, small_config):
        serial = SweepOrchestrator(small_config, workers=1).sweep_lambda()
        parallel = SweepOrchestrator(small_config, workers=2).sweep_lambda()
        assert serial.to_frame().equals(parallel.to_frame())
        assert serial.metadata == parallel.metadata


class TestTemperatureSweep:
    def test_records_and_thresholds(self, small_config):
        result = SweepOrchestrator(small_config).sweep_temperature()
        assert len(result.records) == 6
        # every grid point lies below the Bloch-ball exit near T = 0.264
        assert result.metadata["negativity_threshold_s1"] == pytest.approx(0.1)
        assert all(r.has_flag(Flag.NO_DEPHASING_TERM) for r in result.records if r.s == 3.0)

    def test_single_exponent_override(self, small_config):
        result = SweepOrchestrator(small_config).sweep_temperature(s=1.0)
        assert {r.s for r in result.records} == {1.0}

    def test_threshold_temperature_near_bloch_ball_exit(self, small_config):
        small_config.set("sweep.temperature_min", 0.24)
        small_config.set("sweep.temperature_max", 0.30)
        small_config.set("sweep.temperature_points", 7)
        result = SweepOrchestrator(small_config).sweep_temperature(s=1.0)
        assert result.metadata["negativity_threshold_s1"] == pytest.approx(0.26)
        physical = [r.temperature for r in result.records if r.state_negativity == 0.0]
        assert physical == pytest.approx([0.27, 0.28, 0.29, 0.30])


class TestOptimize:
    def test_optimum_sits_on_box_corner(self, small_config):
        result = SweepOrchestrator(small_config).optimize_f(fmax=0.5)
        assert result.metadata["argmax"] == {"f1": pytest.approx(0.5), "f2": pytest.approx(0.5)}
        assert result.records[0].coherence == pytest.approx(result.metadata["max_coherence"])

    def test_rejects_empty_box(self, small_config):
        with pytest.raises(InvalidParameterError):
            SweepOrchestrator(small_config).optimize_f(fmax=0.0)

    def test_all_points_flagged(self, small_config, monkeypatch):
        monkeypatch.setattr(sweeps, "closed_form_denominator", lambda *args: 0.0)
        with pytest.raises(AllPointsFlaggedError):
            SweepOrchestrator(small_config).optimize_f()


class TestDivergenceScan:
    @pytest.fixture
    def scan_config(self, config):
        config.set("divergence.temperature_min", 0.05)
        config.set("divergence.temperature_max", 5.0)
        config.set("divergence.temperature_points", 20)
        return config

    def test_weak_box_has_no_zeros(self, scan_config):
        scan_config.set("divergence.f_max", 1.0)
        scan_config.set("divergence.f_points", 3)
        assert SweepOrchestrator(scan_config).scan_divergence() == []

    def test_overdriven_brackets_are_tight_and_warned(self, scan_config):
        scan_config.set("divergence.f_max", 10.0)
        scan_config.set("divergence.f_points", 2)
        bath = BathSpec(0.01)
        brackets = SweepOrchestrator(scan_config).scan_divergence()
        assert brackets
        for bracket in brackets:
            assert bracket.f1 * bracket.f2 > 0.0
            assert Flag.WEAK_COUPLING_WARNING in bracket.flags
            assert bracket.t_high - bracket.t_low == pytest.approx(1.0e-6)
            system = SystemSpec(bracket.f1, bracket.f2)
            low = closed_form_denominator(system, bath.with_temperature(bracket.t_low))
            high = closed_form_denominator(system, bath.with_temperature(bracket.t_high))
            assert low * high <= 0.0

    def test_sub_ohmic_is_rejected(self, scan_config):
        with pytest.raises(InvalidParameterError):
            SweepOrchestrator(scan_config).scan_divergence(s=0.5)


class TestSignChanges:
    def test_brackets_crossing(self):
        assert _sign_changes(lambda t: t - 2.0, [1.0, 1.5, 2.5, 3.0]) == [(1.5, 2.5)]

    def test_zero_on_grid_is_counted_once(self):
        assert _sign_changes(lambda t: t - 2.0, [1.0, 2.0, 3.0]) == [(2.0, 3.0)]

    def test_no_crossing(self):
        assert _sign_changes(lambda t: t * t + 1.0, np.linspace(-1.0, 1.0, 5)) == []
