"""Configuration loading from JSON/YAML with environment variable substitution."""

import os
import re
from pathlib import Path
from typing import Optional

import yaml
from pydantic import ValidationError

from .errors import ConfigError
from .models import AppConfig

CONFIG_ENV_VAR = "DSLAB_CONFIG"


def _substitute_env_vars(value: str) -> str:
    """Replace ${ENV_VAR} patterns with environment variable values."""
    pattern = r"\$\{([^}]+)\}"

    def replacer(match):
        env_value = os.environ.get(match.group(1))
        if env_value is None:
            return ""
        return env_value

    return re.sub(pattern, replacer, value)


def _process_config_values(obj):
    """Recursively substitute env vars in all string values."""
    if isinstance(obj, str):
        return _substitute_env_vars(obj)
    elif isinstance(obj, dict):
        return {k: _process_config_values(v) for k, v in obj.items()}
    elif isinstance(obj, list):
        return [_process_config_values(item) for item in obj]
    return obj


def resolve_config_path(cli_path: Optional[str]) -> Optional[str]:
    """The DSLAB_CONFIG environment variable overrides the --config flag."""
    return os.environ.get(CONFIG_ENV_VAR) or cli_path


def load_config(config_path: Optional[str] = None) -> AppConfig:
    """Load and validate configuration.

    The file is JSON (YAML is accepted too, being a superset). With no path the
    built-in defaults are returned.
    """
    if config_path is None:
        return AppConfig()

    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(
            f"Configuration file not found: {config_path}. "
            f"Copy default.json and adjust it."
        )

    with open(path) as f:
        try:
            raw_config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse {config_path}: {e}") from e

    if not isinstance(raw_config, dict):
        raise ConfigError(f"{config_path} must contain a JSON object")

    processed = _process_config_values(raw_config)

    try:
        return AppConfig(**processed)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration in {config_path}: {e}") from e
