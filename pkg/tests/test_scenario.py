"""Tests for scenario parsing and validation."""

import logging

import numpy as np
import pytest

from shotflat.electronics import ResistorType
from shotflat.errors import ScenarioError, ScenarioParseError, ValidationError
from shotflat.fields import Topology
from shotflat.noise import NoiseKind
from shotflat.pointing import save_map, synthetic_map
from shotflat.scatter import ScatterLocation
from shotflat.scenario import (
    OUTPUTS,
    list_scenarios,
    parse_scenario,
    parse_spans,
    resolve_scenario,
)

SHIPPED = ['composite', 'fig10', 'fig11', 'fig3a', 'fig3b', 'fig5', 'fig6', 'fig7', 'fig9']


def with_sections(base, extra):
    return base + '\n' + extra


class TestMinimalScenario:
    """Test defaults of the smallest valid scenario."""

    def test_defaults(self, minimal_scenario, scenario_from_text):
        """Optional blocks are absent and defaults are filled in."""
        config = scenario_from_text(minimal_scenario)

        assert config.name == 'test'
        assert config.laser.power_w == 1e-3
        assert config.laser.rin_psd() is None
        assert config.homodyne.topology is Topology.VARIABLE_GAIN
        assert config.homodyne.auto_balance is True
        assert config.homodyne.optics.eta_bs == 0.5
        assert config.design.resistor_type is ResistorType.METAL_FILM
        assert config.analysis.outputs == ('shot', 'dark')
        assert config.analysis.seed == 0
        assert len(config.analysis.plan) == 1
        assert config.dust is None
        assert config.jitter is None
        assert config.opo is None
        assert config.scatter == ()
        assert config.noise == ()
        assert config.dither.enabled is False
        assert config.modecleaner.enabled is True

    def test_with_seed(self, minimal_scenario, scenario_from_text):
        """Overriding the seed leaves everything else alone."""
        config = scenario_from_text(minimal_scenario)
        reseeded = config.with_seed(99)

        assert reseeded.analysis.seed == 99
        assert reseeded.analysis.plan == config.analysis.plan
        assert config.analysis.seed == 0


class TestShippedScenarios:
    """Test the scenarios that ship with the package."""

    def test_list(self):
        """Every shipped scenario is listed by stem."""
        assert list_scenarios() == sorted(SHIPPED)

    @pytest.mark.parametrize('name', SHIPPED)
    def test_parses(self, name, shipped):
        """Each shipped scenario is valid."""
        config = shipped(name)
        assert config.name == name
        assert config.path is not None
        assert set(config.analysis.outputs) <= set(OUTPUTS)

    def test_nine_span_plan(self, shipped):
        """Continuation lines extend the span list."""
        plan = shipped('fig3b').analysis.plan
        assert len(plan) == 9
        assert [s.edge_hz for s in plan][:2] == [12.5, 50.0]
        assert plan.spans[5].lines == 400
        assert all(s.averages == 500 for s in plan)

    def test_single_gain(self, shipped):
        """``g`` sets both gains of a current subtracting detector."""
        config = shipped('fig3b')
        assert config.homodyne.topology is Topology.CURRENT_SUBTRACTING
        assert config.homodyne.g1 == config.homodyne.g2 == 2e4

    def test_rin_scaled_to_lo_power(self, shipped):
        """RIN calibrated at 1 mW grows with the 1.3 mW LO."""
        rin = shipped('fig3a').laser.rin_psd()
        assert rin.level == pytest.approx(1.0 + 1e4 * 1.3)

    def test_opo_block(self, shipped):
        """The OPO section builds the operating point and the loss chain."""
        config = shipped('fig11')
        assert config.opo.params.pump_ratio == 0.65
        assert config.opo.chain.visibility == 0.994
        assert config.analysis.squeeze_band == (1600.0, 6400.0)

    def test_scatter_and_dither(self, shipped):
        """Scatter sections are keyed by label and the dither is enabled."""
        config = shipped('fig10')
        (label, path), = config.scatter
        assert label == 'signal'
        assert path.location is ScatterLocation.SIGNAL_PORT
        assert path.backscatter_power_fraction == 1e-13
        assert config.dither.enabled and config.dither.cycles == 1.0

    def test_electronic_noise_source(self, shipped):
        """noise.* sections map a PSD onto a port."""
        (source,) = shipped('composite').noise
        assert source.name == 'preamp'
        assert source.port == 'electronic'
        assert source.psd.kind is NoiseKind.WHITE
        assert source.psd(1e3) == pytest.approx(1e-16)

    def test_dust_block(self, shipped):
        """Dust parameters reach the event process."""
        dust = shipped('fig6').dust
        assert dust.location == 'arm1'
        assert dust.process.rate_hz == 0.5
        assert dust.duration_s == 20.0


class TestValidation:
    """Test rejection of bad scenarios."""

    def test_out_of_range_names_the_key(self, scenario_from_text):
        """The error names section.key and the allowed range."""
        text = "[laser]\npower_w = 1e-3\n[homodyne]\neta_bs = 1.5\n[analysis]\nspans = 800:800:20\n"
        with pytest.raises(ValidationError, match='homodyne.eta_bs') as info:
            scenario_from_text(text)
        assert info.value.key == 'homodyne.eta_bs'
        assert info.value.allowed == '(0, 1)'

    def test_not_a_number(self, minimal_scenario, scenario_from_text):
        """Unparseable numbers are validation errors."""
        text = minimal_scenario.replace('power_w = 1e-3', 'power_w = lots')
        with pytest.raises(ValidationError, match='laser.power_w'):
            scenario_from_text(text)

    def test_bad_boolean(self, minimal_scenario, scenario_from_text):
        """Flags accept the usual boolean words only."""
        text = minimal_scenario.replace('topology = variable_gain', 'auto_balance = maybe')
        with pytest.raises(ValidationError, match='homodyne.auto_balance'):
            scenario_from_text(text)

    def test_unknown_key_strict(self, minimal_scenario, scenario_from_text):
        """Unknown keys fail by default."""
        text = minimal_scenario.replace('power_w = 1e-3', 'power_w = 1e-3\npowr = 2')
        with pytest.raises(ScenarioError, match='unknown key'):
            scenario_from_text(text)

    def test_unknown_key_lenient(self, minimal_scenario, scenario_from_text, caplog):
        """Lenient parsing warns and carries on."""
        text = minimal_scenario.replace('power_w = 1e-3', 'power_w = 1e-3\npowr = 2')
        with caplog.at_level(logging.WARNING, logger='shotflat.scenario'):
            config = scenario_from_text(text, strict=False)
        assert config.laser.power_w == 1e-3
        assert 'powr' in caplog.text

    @pytest.mark.parametrize('section', ['[lazer]', '[noise]', '[scatter]'])
    def test_unknown_section(self, minimal_scenario, scenario_from_text, section):
        """Unknown sections and unlabeled noise or scatter sections fail."""
        with pytest.raises(ScenarioError, match='unknown section'):
            scenario_from_text(with_sections(minimal_scenario, f'{section}\nlevel = 1\n'))

    def test_missing_required_section(self, scenario_from_text):
        """laser, homodyne and analysis are required."""
        with pytest.raises(ScenarioError, match=r'missing required section \[analysis\]'):
            scenario_from_text('[laser]\npower_w = 1e-3\n[homodyne]\n')

    def test_line_without_value(self, scenario_from_text):
        """Malformed lines report their line number."""
        with pytest.raises(ScenarioParseError) as info:
            scenario_from_text('[laser]\npower_w 1e-3\n')
        assert info.value.line == 2
        assert str(info.value).startswith('line 2:')

    def test_missing_header(self, scenario_from_text):
        """Keys before any section are rejected."""
        with pytest.raises(ScenarioParseError) as info:
            scenario_from_text('power_w = 1e-3\n[laser]\n')
        assert info.value.line == 1

    def test_duplicate_section(self, minimal_scenario, scenario_from_text):
        """A section may appear once."""
        with pytest.raises(ScenarioParseError):
            scenario_from_text(with_sections(minimal_scenario, '[laser]\npower_w = 2e-3\n'))

    def test_split_gain_for_current_subtracting(self, scenario_from_text):
        """Current subtraction needs equal gains."""
        text = ("[laser]\npower_w = 1e-3\n[homodyne]\ntopology = current_subtracting\n"
                "g1 = 1e4\ng2 = 2e4\n[analysis]\nspans = 800:800:20\n")
        with pytest.raises(ValidationError, match='homodyne.g2'):
            scenario_from_text(text)

    def test_unknown_output(self, minimal_scenario, scenario_from_text):
        """Outputs come from a fixed list."""
        with pytest.raises(ValidationError, match='analysis.outputs'):
            scenario_from_text(minimal_scenario + 'outputs = shot, noise\n')

    def test_squeezing_needs_opo(self, minimal_scenario, scenario_from_text):
        """Squeezing outputs without an OPO are meaningless."""
        with pytest.raises(ScenarioError, match=r'\[opo\]'):
            scenario_from_text(minimal_scenario + 'outputs = squeezing\n')

    def test_disabled_opo_is_absent(self, minimal_scenario, scenario_from_text):
        """enabled = false drops an optional block."""
        config = scenario_from_text(with_sections(minimal_scenario, '[opo]\nenabled = false\npump_ratio = 0.5\n'))
        assert config.opo is None

    def test_bad_squeeze_band(self, minimal_scenario, scenario_from_text):
        """The squeeze band needs 0 < low < high."""
        with pytest.raises(ValidationError, match='squeeze_band'):
            scenario_from_text(minimal_scenario + 'squeeze_band = 500:100\n')

    def test_invalid_dust_bounds(self, minimal_scenario, scenario_from_text):
        """Cross-key checks surface as scenario errors naming the section."""
        text = with_sections(minimal_scenario, '[dust]\nrate_hz = 1\ndepth_min = 0.02\ndepth_max = 0.01\n')
        with pytest.raises(ScenarioError, match=r'\[dust\]'):
            scenario_from_text(text)


class TestSpans:
    """Test the span list syntax."""

    def test_parse(self):
        """edge:lines:averages separated by commas."""
        plan = parse_spans('800:800:200, 6400:800:200')
        assert [(s.edge_hz, s.lines, s.averages) for s in plan] == [(800.0, 800, 200), (6400.0, 800, 200)]

    @pytest.mark.parametrize('text', ['800:800', '800:eight:200', '', '6400:800:1, 800:800:1', '800:1:10'])
    def test_invalid(self, text):
        """Malformed, empty, unsorted and single-line plans fail."""
        with pytest.raises(ValidationError, match='analysis.spans'):
            parse_spans(text)


class TestFiles:
    """Test locating and reading scenario files."""

    def test_resolve_by_stem_and_suffix(self):
        """Shipped scenarios resolve with or without the suffix."""
        assert resolve_scenario('fig5').name == 'fig5.scn'
        assert resolve_scenario('fig5.scn').name == 'fig5.scn'

    def test_resolve_path(self, write_scenario, minimal_scenario):
        """Existing paths win over shipped stems."""
        path = write_scenario(minimal_scenario, name='fig5')
        assert resolve_scenario(str(path)) == path
        assert parse_scenario(path).laser.power_w == 1e-3

    def test_missing(self):
        """Unknown names list what ships."""
        with pytest.raises(ScenarioError, match='fig11'):
            resolve_scenario('no-such-scenario')

    def test_map_paths_relative_to_scenario(self, tmp_path, write_scenario, minimal_scenario):
        """Efficiency map files are found next to the scenario."""
        save_map(synthetic_map(20, 20, 10e-6, seed=1), tmp_path / 'diode1.map')
        path = write_scenario(with_sections(minimal_scenario, '[jitter]\nmap1 = diode1.map\n'))

        config = parse_scenario(path)

        assert config.jitter.map_files == (tmp_path / 'diode1.map', None)
        assert config.jitter.displacement(10.0) > 0
        assert np.isfinite(config.jitter.displacement(10.0))
