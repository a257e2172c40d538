"""Utility functions for shotflat."""

import os
from pathlib import Path
from typing import Optional, Dict, Any

import numpy as np
from dotenv import dotenv_values

ENV_FILE = '.shotflat.env'
ENV_PREFIX = 'SHOTFLAT_'


def find_git_root(start_path: Path) -> Optional[Path]:
    """Find the git repository root by looking for .git directory.

    Args:
        start_path: Path to start searching from

    Returns:
        Path to git root directory, or None if not in a git repo
    """
    current = start_path.resolve()

    while current != current.parent:
        git_dir = current / '.git'
        if git_dir.exists():
            return current
        current = current.parent

    return None


def load_cascading_env(scenario_path: Path = None) -> Dict[str, Any]:
    """Load runtime settings from cascading .shotflat.env files.

    Loads in order (each overrides previous):
    1. Project root .shotflat.env (if in git repo)
    2. Current working directory .shotflat.env
    3. Scenario directory .shotflat.env (if provided)
    4. System environment variables (SHOTFLAT_* only)

    Args:
        scenario_path: Scenario file being run

    Returns:
        Dictionary of configuration values
    """
    config = {}
    cwd = Path.cwd()
    seen = []

    git_root = find_git_root(cwd)
    if git_root:
        root_env = git_root / ENV_FILE
        if root_env.exists():
            config.update(dotenv_values(root_env))
            seen.append(root_env.resolve())

    cwd_env = cwd / ENV_FILE
    if cwd_env.exists() and cwd_env.resolve() not in seen:
        config.update(dotenv_values(cwd_env))
        seen.append(cwd_env.resolve())

    if scenario_path:
        scn_env = scenario_path.resolve().parent / ENV_FILE
        if scn_env.exists() and scn_env.resolve() not in seen:
            config.update(dotenv_values(scn_env))

    for key, value in os.environ.items():
        if key.startswith(ENV_PREFIX):
            config[key] = value

    return config


def parse_bool_env(value: str) -> bool:
    """Parse a boolean environment variable value.

    Args:
        value: String value to parse

    Returns:
        Boolean interpretation of the value
    """
    if not value:
        return False
    return value.lower() in ('true', '1', 'yes', 'on')


def get_config_value(config: Dict[str, Any], key: str, default: Any = None) -> Any:
    """Get a configuration value with type conversion.

    Args:
        config: Configuration dictionary
        key: Configuration key (without SHOTFLAT_ prefix)
        default: Default value if not found

    Returns:
        Configuration value with appropriate type
    """
    value = config.get(f'{ENV_PREFIX}{key}', config.get(key, default))

    if value is None:
        return default

    if isinstance(default, bool):
        return parse_bool_env(str(value))
    elif isinstance(default, int):
        try:
            return int(value)
        except (ValueError, TypeError):
            return default
    elif isinstance(default, float):
        try:
            return float(value)
        except (ValueError, TypeError):
            return default
    else:
        return value


def stream_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent random stream for (seed, keys...).

    The same seed and keys always give the same stream, whatever order the
    streams are created in or which process creates them.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))
