"""
Configuration Loading

Settings come from (highest precedence first) explicit CLI flags, a
plain key=value config file, the environment (including a ``.env``
file) and the built-in defaults below.
"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values, load_dotenv

from ledfit.errors import ConfigError

load_dotenv()

DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "starts": 10,
    "budget": None,
    "method": "s-newton",
    "workers": 1,
    "pool_size": 100,
    "decimals": None,
    "plane": 0,
}

# Keys whose values are converted to int when read from text.
_INT_KEYS = {"seed", "starts", "budget", "workers", "pool_size", "decimals", "plane"}


def default_workers() -> int:
    """Worker count for experiment fan-out, from LEDFIT_WORKERS."""
    raw = os.getenv("LEDFIT_WORKERS")
    if not raw:
        return DEFAULTS["workers"]
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"LEDFIT_WORKERS must be an integer, got {raw!r}")
    return max(1, workers)


def log_level() -> str:
    return os.getenv("LEDFIT_LOG_LEVEL", "WARNING").upper()


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """
    Read a key=value config file.

    Args:
        path: File path, or None for no file

    Returns:
        Dictionary of typed settings found in the file
    """
    if path is None:
        return {}
    if not Path(path).exists():
        raise ConfigError(f"config file not found: {path}")

    settings: Dict[str, Any] = {}
    for key, value in dotenv_values(path).items():
        key = key.strip().lower().replace("-", "_")
        if value is None or value == "":
            continue
        if key in _INT_KEYS:
            try:
                settings[key] = int(value)
            except ValueError:
                raise ConfigError(f"{path}: {key} must be an integer, got {value!r}")
        else:
            settings[key] = value
    return settings


def resolve(flags: Dict[str, Any], file_settings: Dict[str, Any]) -> Dict[str, Any]:
    """Merge settings: explicit flags > config file > environment > defaults."""
    merged = dict(DEFAULTS)
    merged["workers"] = default_workers()
    merged.update(file_settings)
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged
