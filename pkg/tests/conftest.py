"""Pytest configuration and shared fixtures."""
import os
import sys
from pathlib import Path

import pytest

from shotflat.scenario import parse_scenario, parse_scenario_text

MINIMAL_SCENARIO = """\
[laser]
power_w = 1e-3

[homodyne]
topology = variable_gain

[analysis]
spans = 800:800:20
"""


@pytest.fixture
def minimal_scenario():
    """Smallest valid scenario: laser, homodyne and analysis only."""
    return MINIMAL_SCENARIO


@pytest.fixture(scope="session")
def project_root():
    """Get project root directory."""
    return Path(__file__).parent.parent


@pytest.fixture
def write_scenario(tmp_path):
    """Write scenario text to a temporary .scn file and return its path."""
    def _write(text, name='test'):
        path = tmp_path / f'{name}.scn'
        path.write_text(text, encoding='utf-8')
        return path
    return _write


@pytest.fixture
def scenario_from_text():
    """Parse scenario text without touching the filesystem."""
    def _parse(text, name='test', strict=True):
        return parse_scenario_text(text, name, strict=strict)
    return _parse


@pytest.fixture
def shipped():
    """Parse a shipped scenario by stem."""
    return lambda name: parse_scenario(name)


@pytest.fixture(scope="session")
def cli_env(project_root):
    """Environment for running the CLI in a subprocess against the source tree."""
    env = dict(os.environ)
    src = str(project_root / 'src')
    existing = env.get('PYTHONPATH')
    env['PYTHONPATH'] = os.pathsep.join(filter(None, [src, existing]))
    for key in list(env):
        if key.startswith('SHOTFLAT_'):
            del env[key]
    return env


@pytest.fixture(scope="session")
def shotflat_command():
    """Command to run the shotflat CLI."""
    return [sys.executable, '-m', 'shotflat.cli']
