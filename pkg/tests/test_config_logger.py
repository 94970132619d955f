import pytest

from src.config import DEFAULTS, Config
from src.errors import SSCError
from src.logger import AnalysisLogger, setup_logging


class TestConfig:
    def test_missing_file_uses_defaults(self, config, tmp_path):
        loaded = Config(str(tmp_path / "absent.yaml"))
        assert loaded.config == config.config
        assert config.coupling == DEFAULTS["bath"]["lambda"]
        assert config.mode == "nonsecular"
        assert config.output_path is None

    def test_yaml_is_merged_over_defaults(self, config, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("bath:\n  temperature: 0.25\nsweep:\n  lambda_points: 7\n")
        loaded = Config(str(path))
        assert loaded.temperature == 0.25
        assert loaded.cutoff == 10.0
        assert loaded.lambda_grid == {"start": 1.0e-6, "stop": 1.0e-1, "points": 7}

    def test_environment_overrides(self, config, monkeypatch):
        monkeypatch.setenv("SSC_WORKERS", "4")
        monkeypatch.setenv("SSC_CUTOFF", "5.5")
        monkeypatch.setenv("SSC_OUTPUT_FORMAT", "JSON")
        loaded = Config(None)
        assert loaded.workers == 4
        assert loaded.cutoff == 5.5
        assert loaded.output_format == "json"

    def test_set_ignores_none(self, config):
        config.set("bath.lambda", None)
        config.set("system.f2", 0.5)
        assert config.coupling == 0.01
        assert config.f2 == 0.5

    def test_get_with_default(self, config):
        assert config.get("no.such.key", "fallback") == "fallback"

    def test_workers_are_at_least_one(self, config):
        config.set("sweep.workers", 0)
        assert config.workers == 1

    def test_snapshot_drops_run_only_keys(self, config):
        config.set("sweep.workers", 4)
        config.set("output.path", "out.csv")
        snapshot = config.snapshot
        assert "workers" not in snapshot["sweep"]
        assert "output" not in snapshot and "logging" not in snapshot
        assert snapshot["sweep"]["lambda_points"] == config.get("sweep.lambda_points")
        assert snapshot["bath"] == config.config["bath"]
        assert config.workers == 4


class TestLogging:
    def test_errors_are_logged_with_diagnostics(self, config, tmp_path):
        log_file = tmp_path / "logs" / "analysis.log"
        config.set("logging.file", str(log_file))
        config.set("logging.level", "DEBUG")
        setup_logging(config)

        logger = AnalysisLogger("test_logging")
        logger.log_error_with_context(SSCError("solver failed", {"residual": 1.5e-3}),
                                      {"operation": "steady"})
        logger.log_sweep_progress(total=4, processed=2, sweep="lambda")
        logger.log_numerical_event("quadrature", status="failed", abserr=1.0)

        text = log_file.read_text()
        assert "solver failed" in text
        assert "residual" in text
        assert "progress_percent" in text
        assert "Numerical quadrature failed" in text

    def test_error_carries_exit_code_and_diagnostics(self):
        error = SSCError("boom", {"key": 1})
        assert error.exit_code == 3
        assert error.diagnostics == {"key": 1}
        assert str(error) == "boom"
