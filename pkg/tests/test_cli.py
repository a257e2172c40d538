"""Integration tests running the shotflat CLI in a subprocess."""
import csv
import subprocess

import pytest
import yaml

from shotflat.scenario import list_scenarios

pytestmark = pytest.mark.integration

SMALL = """\
[laser]
power_w = 1e-3

[homodyne]
topology = variable_gain

[analysis]
spans = 200:200:10, 800:200:10
outputs = shot, dark
seed = 4
"""


@pytest.fixture
def run(shotflat_command, cli_env, tmp_path):
    """Run the CLI from an empty working directory."""
    def _run(*args, env=None):
        full_env = dict(cli_env)
        full_env.update(env or {})
        return subprocess.run(
            shotflat_command + [str(a) for a in args],
            capture_output=True,
            text=True,
            env=full_env,
            cwd=tmp_path,
        )
    return _run


def load_yaml(path):
    return yaml.safe_load(path.read_text(encoding='utf-8'))


class TestBasics:
    """Test help, version and listing."""

    def test_help(self, run):
        """The group lists every command."""
        result = run('--help')
        assert result.returncode == 0
        for command in ('list', 'budget', 'simulate', 'cmrr', 'dither-scan', 'squeeze-predict', 'dust-monitor'):
            assert command in result.stdout

    def test_short_help(self, run):
        """Commands accept -h."""
        result = run('budget', '-h')
        assert result.returncode == 0
        assert '--out' in result.stdout

    def test_version(self, run):
        """Version matches the package."""
        result = run('--version')
        assert result.returncode == 0
        assert '0.1.0' in result.stdout

    def test_list(self, run):
        """Shipped scenarios are printed one per line."""
        result = run('list')
        assert result.returncode == 0
        assert result.stdout.split() == list_scenarios()


class TestCommands:
    """Test each command end to end."""

    def test_budget(self, run, tmp_path):
        """Budget writes traces and a report."""
        out = tmp_path / 'out'
        result = run('budget', 'fig5', '--out', out)

        assert result.returncode == 0, result.stderr
        assert 'cmrr_db' in result.stdout
        for name in ('shot.csv', 'diode1.csv', 'shot_psd.csv', 'report.yaml'):
            assert (out / name).exists()
        report = load_yaml(out / 'report.yaml')
        assert report['mode'] == 'budget'
        assert report['seed'] == 5
        assert report['scalars']['cmrr_db'] == pytest.approx(80.0, abs=0.01)

    def test_simulate(self, run, tmp_path):
        """Monte-Carlo runs write the same layout."""
        (tmp_path / 'small.scn').write_text(SMALL, encoding='utf-8')
        out = tmp_path / 'sim'

        result = run('simulate', tmp_path / 'small.scn', '--out', out, '--workers', '1')

        assert result.returncode == 0, result.stderr
        assert load_yaml(out / 'report.yaml')['mode'] == 'monte_carlo'
        assert (out / 'dark.csv').exists()

    def test_cmrr(self, run, tmp_path):
        """CMRR writes cmrr.yaml including the dust peak."""
        result = run('cmrr', 'fig6', '--out', tmp_path)

        assert result.returncode == 0, result.stderr
        data = load_yaml(tmp_path / 'cmrr.yaml')
        assert data['cmrr_dust_peak_db'] == pytest.approx(38.42, abs=0.01)

    def test_squeeze_predict(self, run, tmp_path):
        """Prediction writes squeeze.yaml."""
        result = run('squeeze-predict', 'fig11', '--out', tmp_path)

        assert result.returncode == 0, result.stderr
        data = load_yaml(tmp_path / 'squeeze.yaml')
        assert data['squeezing_db'] == pytest.approx(-12.04, abs=0.1)
        assert set(data) == {'eta_total', 'squeezing_db', 'anti_squeezing_db'}

    def test_dither_scan(self, run, tmp_path):
        """Scan results land in dither_scan.csv."""
        result = run('dither-scan', 'fig10', '--cycles', '0.5,1', '--out', tmp_path)

        assert result.returncode == 0, result.stderr
        with (tmp_path / 'dither_scan.csv').open(encoding='utf-8', newline='') as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ['cycles', 'residual_power_w2']
        assert [float(r[0]) for r in rows[1:]] == [0.5, 1.0]

    def test_dust_monitor(self, run, tmp_path):
        """The DC monitor is written as time and volts."""
        result = run('dust-monitor', 'fig6', '--out', tmp_path)

        assert result.returncode == 0, result.stderr
        with (tmp_path / 'dc_monitor.csv').open(encoding='utf-8', newline='') as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ['time_s', 'volts']
        assert len(rows) == 20001
        assert load_yaml(tmp_path / 'report.yaml')['scalars']['dips'] > 0


class TestErrors:
    """Test exit codes and messages."""

    def test_invalid_value(self, run, tmp_path):
        """Validation errors exit 1 and name the key."""
        path = tmp_path / 'bad.scn'
        path.write_text(SMALL.replace('[homodyne]', '[homodyne]\neta_bs = 1.5'), encoding='utf-8')

        result = run('budget', path)

        assert result.returncode == 1
        assert 'homodyne.eta_bs' in result.stderr

    def test_missing_scenario(self, run):
        """Unknown scenarios exit 1."""
        result = run('budget', 'no-such-scenario')
        assert result.returncode == 1
        assert 'scenario not found' in result.stderr

    def test_domain_error(self, run):
        """Physics errors exit 2."""
        result = run('squeeze-predict', 'fig5')
        assert result.returncode == 2
        assert 'opo' in result.stderr

    def test_output_path_is_a_file(self, run, tmp_path):
        """Unwritable output directories exit 2 without a traceback."""
        blocker = tmp_path / 'taken'
        blocker.write_text('not a directory\n', encoding='utf-8')

        result = run('cmrr', 'fig5', '--out', blocker)

        assert result.returncode == 2
        assert '❌' in result.stderr
        assert 'Traceback' not in result.stderr

    def test_bad_cycles(self, run):
        """Non-numeric dither amplitudes are rejected."""
        result = run('dither-scan', 'fig10', '--cycles', 'one,two')
        assert result.returncode == 1
        assert '--cycles' in result.stderr

    def test_unknown_key_strict_and_lenient(self, run, tmp_path):
        """Unknown keys fail unless --lenient is given."""
        path = tmp_path / 'typo.scn'
        path.write_text(SMALL.replace('power_w = 1e-3', 'power_w = 1e-3\npowr = 2'), encoding='utf-8')

        assert run('budget', path).returncode == 1
        assert run('budget', path, '--lenient').returncode == 0


class TestSettings:
    """Test settings from the environment and .shotflat.env files."""

    def test_seed_from_environment(self, run, tmp_path):
        """SHOTFLAT_SEED replaces the scenario seed."""
        result = run('budget', 'fig5', '--out', tmp_path, env={'SHOTFLAT_SEED': '77'})
        assert result.returncode == 0, result.stderr
        assert load_yaml(tmp_path / 'report.yaml')['seed'] == 77

    def test_option_beats_environment(self, run, tmp_path):
        """--seed wins over SHOTFLAT_SEED."""
        run('budget', 'fig5', '--out', tmp_path, '--seed', '3', env={'SHOTFLAT_SEED': '77'})
        assert load_yaml(tmp_path / 'report.yaml')['seed'] == 3

    def test_env_file_next_to_scenario(self, run, tmp_path):
        """A .shotflat.env beside the scenario sets the output directory."""
        (tmp_path / 'small.scn').write_text(SMALL, encoding='utf-8')
        (tmp_path / '.shotflat.env').write_text('SHOTFLAT_OUT=results\n', encoding='utf-8')

        result = run('budget', tmp_path / 'small.scn')

        assert result.returncode == 0, result.stderr
        assert (tmp_path / 'results' / 'report.yaml').exists()

    def test_lenient_from_environment(self, run, tmp_path):
        """SHOTFLAT_STRICT=false behaves like --lenient."""
        path = tmp_path / 'typo.scn'
        path.write_text(SMALL.replace('power_w = 1e-3', 'power_w = 1e-3\npowr = 2'), encoding='utf-8')

        assert run('budget', path, env={'SHOTFLAT_STRICT': 'false'}).returncode == 0
