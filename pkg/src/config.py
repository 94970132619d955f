"""Configuration management for the steady-state coherence analysis."""

import os
import copy
import yaml
from typing import Dict, Any, List, Optional
from dotenv import load_dotenv

DEFAULTS: Dict[str, Any] = {
    'bath': {
        'lambda': 0.01,
        's': 1.0,
        'cutoff': 10.0,
        'temperature': 1.0,
    },
    'system': {
        'omega0': 1.0,
        'f1': 1.0,
        'f2': 1.0,
        'mode': 'nonsecular',
    },
    'sweep': {
        'workers': 1,
        'lambda_min': 1.0e-6,
        'lambda_max': 1.0e-1,
        'lambda_points': 60,
        'temperature_min': 0.02,
        'temperature_max': 5.0,
        'temperature_points': 100,
        'temperature_exponents': [1.0, 3.0],
        'slope_window': [1.0e-6, 1.0e-4],
    },
    'optimize': {
        'fmax': 1.0,
        'grid_points': 21,
        'min_step': 1.0e-4,
    },
    'divergence': {
        'temperature_min': 0.05,
        'temperature_max': 50.0,
        'temperature_points': 200,
        'f_max': 10.0,
        'f_points': 11,
        'bracket_width': 1.0e-6,
    },
    'dynamics': {
        't_end': None,
        'rtol': 1.0e-9,
        'atol': 1.0e-12,
        'cache_t_min': 1.0e-3,
        'cache_t_max': 1.0e3,
        'points_per_decade': 64,
        'scan_theta_points': 12,
        'scan_phi_points': 24,
        'scan_t_end': 20.0,
        'violation_threshold': 1.0e-9,
    },
    'output': {
        'format': 'csv',
        'path': None,
    },
    'logging': {
        'level': 'INFO',
        'format': 'json',
        'file': None,
    },
}

# Settings that change how a run executes but never what it computes
RUN_ONLY_KEYS = ("sweep.workers", "output", "logging")

class Config:
    """Centralized configuration management."""

    def __init__(self, config_path: Optional[str] = "config.yaml"):
        """Initialize configuration from YAML file and environment variables."""
        load_dotenv()

        self.config = copy.deepcopy(DEFAULTS)
        if config_path and os.path.exists(config_path):
            with open(config_path, 'r') as file:
                loaded = yaml.safe_load(file) or {}
            self._merge(self.config, loaded)

        # Override with environment variables
        self._load_env_overrides()

    def _merge(self, base: Dict[str, Any], update: Dict[str, Any]):
        """Merge a loaded YAML mapping into the defaults."""
        for key, value in update.items():
            if isinstance(value, dict) and isinstance(base.get(key), dict):
                self._merge(base[key], value)
            else:
                base[key] = value

    def _load_env_overrides(self):
        """Load configuration overrides from environment variables."""
        env_mappings = {
            'SSC_WORKERS': 'sweep.workers',
            'SSC_LOG_LEVEL': 'logging.level',
            'SSC_LOG_FILE': 'logging.file',
            'SSC_CUTOFF': 'bath.cutoff',
            'SSC_OUTPUT_FORMAT': 'output.format',
        }

        for env_var, config_path in env_mappings.items():
            value = os.getenv(env_var)
            if value:
                self._set_nested_value(config_path, value)

    def _set_nested_value(self, path: str, value: Any):
        """Set a nested configuration value using dot notation."""
        keys = path.split('.')
        current = self.config

        for key in keys[:-1]:
            if key not in current:
                current[key] = {}
            current = current[key]

        # Convert numeric strings to appropriate types
        if isinstance(value, str):
            if value.isdigit():
                value = int(value)
            elif value.replace('.', '', 1).replace('e-', '', 1).isdigit():
                value = float(value)
            elif value.lower() in ('true', 'false'):
                value = value.lower() == 'true'

        current[keys[-1]] = value

    def set(self, path: str, value: Any):
        """Set a configuration value using dot notation (CLI overrides)."""
        if value is not None:
            self._set_nested_value(path, value)

    def get(self, path: str, default: Any = None) -> Any:
        """Get configuration value using dot notation."""
        keys = path.split('.')
        current = self.config

        try:
            for key in keys:
                current = current[key]
            return current
        except (KeyError, TypeError):
            return default

    @property
    def snapshot(self) -> Dict[str, Any]:
        """Get the configuration that determines results, without run-only keys."""
        snapshot = copy.deepcopy(self.config)
        for path in RUN_ONLY_KEYS:
            *parents, leaf = path.split('.')
            current = snapshot
            for key in parents:
                current = current.get(key, {})
            current.pop(leaf, None)
        return snapshot

    @property
    def coupling(self) -> float:
        """Get the bath coupling scale λ."""
        return float(self.get('bath.lambda', 0.01))

    @property
    def ohmicity(self) -> float:
        """Get the Ohmicity exponent s."""
        return float(self.get('bath.s', 1.0))

    @property
    def cutoff(self) -> float:
        """Get the bath cutoff Ω in units of ω₀."""
        return float(self.get('bath.cutoff', 10.0))

    @property
    def temperature(self) -> float:
        """Get the bath temperature in units of ω₀."""
        return float(self.get('bath.temperature', 1.0))

    @property
    def omega0(self) -> float:
        """Get the level splitting."""
        return float(self.get('system.omega0', 1.0))

    @property
    def f1(self) -> float:
        """Get the σx coupling weight."""
        return float(self.get('system.f1', 1.0))

    @property
    def f2(self) -> float:
        """Get the σz coupling weight."""
        return float(self.get('system.f2', 1.0))

    @property
    def mode(self) -> str:
        """Get the generator mode name."""
        return str(self.get('system.mode', 'nonsecular'))

    @property
    def workers(self) -> int:
        """Get the sweep worker count."""
        return max(1, int(self.get('sweep.workers', 1)))

    @property
    def lambda_grid(self) -> Dict[str, Any]:
        """Get the λ sweep grid settings."""
        return {
            'start': float(self.get('sweep.lambda_min')),
            'stop': float(self.get('sweep.lambda_max')),
            'points': int(self.get('sweep.lambda_points')),
        }

    @property
    def temperature_grid(self) -> Dict[str, Any]:
        """Get the temperature sweep grid settings."""
        return {
            'start': float(self.get('sweep.temperature_min')),
            'stop': float(self.get('sweep.temperature_max')),
            'points': int(self.get('sweep.temperature_points')),
        }

    @property
    def temperature_exponents(self) -> List[float]:
        """Get the Ohmicity exponents used by the temperature sweep."""
        return [float(s) for s in self.get('sweep.temperature_exponents', [1.0, 3.0])]

    @property
    def slope_window(self) -> List[float]:
        """Get the λ window used for log-log slope fits."""
        return [float(x) for x in self.get('sweep.slope_window', [1.0e-6, 1.0e-4])]

    @property
    def optimize_settings(self) -> Dict[str, Any]:
        """Get the (f1, f2) optimizer settings."""
        return {
            'fmax': float(self.get('optimize.fmax', 1.0)),
            'grid_points': int(self.get('optimize.grid_points', 21)),
            'min_step': float(self.get('optimize.min_step', 1.0e-4)),
        }

    @property
    def divergence_settings(self) -> Dict[str, Any]:
        """Get the denominator scan settings."""
        return dict(self.get('divergence', {}))

    @property
    def dynamics_settings(self) -> Dict[str, Any]:
        """Get the trajectory integration settings."""
        return dict(self.get('dynamics', {}))

    @property
    def output_format(self) -> str:
        """Get the emission format (csv or json)."""
        return str(self.get('output.format', 'csv')).lower()

    @property
    def output_path(self) -> Optional[str]:
        """Get the output path; None means stdout."""
        return self.get('output.path')

    @property
    def log_level(self) -> str:
        """Get logging level."""
        return self.get('logging.level', 'INFO')

    @property
    def log_file(self) -> Optional[str]:
        """Get log file path."""
        return self.get('logging.file')
