"""
Configuration settings for the deh-harvest runner.
"""

import json
import logging
import os
from typing import Any, Dict, Optional

from physics.errors import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = "DEH_HARVEST_"
# Only the thread count may come from the environment.
ENV_KEYS = ("threads",)

# Default settings. Physics defaults stand in for unstated figure inputs.
DEFAULT_CONFIG: Dict[str, Any] = {
    "g": 1.0,
    "omega0": 10.0,
    "omega_c": 10.0,
    "n_max": 30,
    "alpha_mag": 1.0,
    "t_end": 25.0,
    "samples": 1001,
    "tolerance": 1e-3,
    "wigner_range": [-6.0, 6.0],
    "wigner_points": 201,
    "threads": 1,
    "smoothing_eta": 1e-9,
    "substeps": 8,
    "max_substeps": 2 ** 17,
    "convergence_tol": 1e-8,
    "log_level": "INFO",
    "log_file": None,
}


class Config:
    """Manages runner configuration settings."""

    def __init__(self, config_path: Optional[str] = None):
        """Initialize configuration with default values and optional file loading."""
        self.settings: Dict[str, Any] = dict(DEFAULT_CONFIG)

        if config_path:
            self.load_from_file(config_path)

        self.load_from_env()

    def load_from_file(self, config_path: str) -> None:
        """
        Merge settings from a JSON file.

        Raises:
            ConfigError: if the file is unreadable, not a JSON object, or names unknown keys
        """
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                file_config = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot load configuration from {config_path}: {e}") from e
        if not isinstance(file_config, dict):
            raise ConfigError(f"configuration in {config_path} must be a JSON object")
        unknown = sorted(set(file_config) - set(DEFAULT_CONFIG))
        if unknown:
            raise ConfigError(f"unknown configuration keys in {config_path}: {', '.join(unknown)}")
        self.settings.update(file_config)
        logger.debug(f"Loaded configuration from {config_path}")

    def load_from_env(self) -> None:
        """Apply environment overrides (``DEH_HARVEST_THREADS``)."""
        for key in ENV_KEYS:
            env_key = f"{ENV_PREFIX}{key.upper()}"
            if env_key not in os.environ:
                continue
            raw = os.environ[env_key]
            try:
                value = int(raw)
            except ValueError as e:
                raise ConfigError(f"{env_key} must be an integer, got {raw!r}") from e
            if value < 1:
                raise ConfigError(f"{env_key} must be at least 1, got {value}")
            self.settings[key] = value

    def get(self, key: str, default=None) -> Any:
        """Get a configuration value with an optional default."""
        return self.settings.get(key, default)

    def set(self, key: str, value: Any) -> None:
        """Set a configuration value."""
        self.settings[key] = value

    def save(self, config_path: str) -> bool:
        """Save current configuration to a file."""
        try:
            with open(config_path, "w", encoding="utf-8") as f:
                json.dump(self.settings, f, indent=2, sort_keys=True)
            return True
        except OSError as e:
            logger.error(f"Error saving configuration to {config_path}: {e}")
            return False
