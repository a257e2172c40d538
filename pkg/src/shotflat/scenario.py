"""Scenario files: INI sections describing one homodyne experiment.

A scenario names the laser, optics, electronics, noise sources and the span
plan of the analysis. Shipped scenarios live in ``shotflat/scenarios`` and
can be referred to by stem (``fig3b``).
"""

import configparser
import logging
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from .electronics import (
    DEFAULT_DARK_CLEARANCE_DB,
    DEFAULT_DARK_CORNER_HZ,
    DEFAULT_DARK_REFERENCE_W,
    DEFAULT_RESPONSIVITY,
    DarkSettings,
    DetectorDesign,
    ResistorType,
)
from .errors import DomainError, ScenarioError, ScenarioParseError, ValidationError
from .fields import HomodyneOptics, LocalOscillator, Topology
from .noise import DustEventProcess, NoiseKind, NoisePsd, PulseShape, rin_model, vibration
from .pointing import Modecleaner
from .scatter import DitherDrive, ScatterLocation, ScatterPath
from .spectral import BUDGET_PORTS, Span, SpanPlan
from .squeezing import EfficiencyChain, OpoParams

log = logging.getLogger(__name__)

SCENARIO_SUFFIX = '.scn'
OUTPUTS = ('shot', 'dark', 'squeezing', 'anti_squeezing', 'diode1')
DUST_LOCATIONS = ('arm1', 'common')
JITTER_LOCATIONS = ('pre_mc', 'post_mc')


@dataclass(frozen=True)
class Key:
    """Schema entry: converter, default and the allowed range as shown to users."""

    convert: Callable[[str], Any]
    default: Any
    allowed: str = 'any'
    check: Callable[[Any], bool] = lambda value: True


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
        raise ValueError(f"not a boolean: {text!r}")
    return configparser.ConfigParser.BOOLEAN_STATES[lowered]


def _interval(low: float, high: float, low_open: bool, high_open: bool) -> Tuple[str, Callable]:
    left = '(' if low_open else '['
    right = ')' if high_open else ']'
    allowed = f"{left}{low:g}, {high:g}{right}"

    def check(value):
        above = value > low if low_open else value >= low
        below = value < high if high_open else value <= high
        return above and below

    return allowed, check


def number(default, low=-math.inf, high=math.inf, low_open=False, high_open=False, convert=float) -> Key:
    allowed, check = _interval(low, high, low_open or math.isinf(low), high_open or math.isinf(high))
    return Key(convert, default, allowed, check)


def positive(default, convert=float) -> Key:
    return number(default, 0.0, math.inf, low_open=True, convert=convert)


def fraction(default, low_open=False, high_open=False) -> Key:
    return number(default, 0.0, 1.0, low_open, high_open)


def choice(default, options) -> Key:
    return Key(str, default, '{' + ', '.join(options) + '}', lambda value: value in options)


def flag(default: bool) -> Key:
    return Key(_bool, default, '{true, false}')


def optional_number(check: Key) -> Key:
    return Key(check.convert, None, check.allowed, check.check)


SCHEMA: Dict[str, Dict[str, Key]] = {
    'laser': {
        'power_w': positive(1e-3),
        'wavelength_m': positive(1064e-9),
        'rin_db': optional_number(number(None)),
        'rin_reference_power_w': positive(1e-3),
        'rin_corner_hz': positive(1e3),
    },
    'modecleaner': {
        'enabled': flag(True),
        'linewidth_hz': positive(4.7e6),
        'hom_suppression': number(1.0, 1.0, math.inf),
        'waist_m': positive(500e-6),
    },
    'homodyne': {
        'eta_bs': fraction(0.5, low_open=True, high_open=True),
        'eta_l': fraction(0.0),
        'eta_pd1': fraction(1.0, low_open=True),
        'eta_pd2': fraction(1.0, low_open=True),
        'topology': choice(Topology.VARIABLE_GAIN.value, [t.value for t in Topology]),
        'g': optional_number(positive(None)),
        'g1': positive(1e4),
        'g2': positive(1e4),
        'auto_balance': flag(True),
    },
    'electronics': {
        'resistor_type': choice(ResistorType.METAL_FILM.value, [r.value for r in ResistorType]),
        'responsivity': positive(DEFAULT_RESPONSIVITY),
        'dark_clearance_db': number(DEFAULT_DARK_CLEARANCE_DB),
        'dark_reference_power_w': positive(DEFAULT_DARK_REFERENCE_W),
        'dark_corner_hz': number(DEFAULT_DARK_CORNER_HZ, 0.0),
        'flicker_index': optional_number(number(None, 0.0)),
    },
    'noise': {
        'port': choice('lo', list(BUDGET_PORTS)),
        'kind': choice(NoiseKind.WHITE.value, [k.value for k in NoiseKind if k is not NoiseKind.COMPOSITE]),
        'level': number(1.0),
        'reference_frequency': positive(1.0),
        'exponent': number(1.0),
        'corner_hz': positive(1e3),
    },
    'scatter': {
        'location': choice(ScatterLocation.ARM1.value, [s.value for s in ScatterLocation]),
        'fraction': fraction(0.0, high_open=True),
        'isolation_db': number(0.0, 0.0),
        'displacement_level': number(1e-16, 0.0),
        'corner_hz': positive(50.0),
        'floor': optional_number(number(None, 0.0)),
        'static_phase': optional_number(number(None)),
    },
    'dust': {
        'enabled': flag(True),
        'location': choice('arm1', DUST_LOCATIONS),
        'rate_hz': number(0.0, 0.0),
        'depth_min': fraction(0.001, high_open=True),
        'depth_max': fraction(0.012, high_open=True),
        'duration_min_s': positive(0.01),
        'duration_max_s': positive(0.5),
        'pulse_shape': choice(PulseShape.RAISED_COSINE.value, [p.value for p in PulseShape]),
        'monitor_rate_hz': positive(1e3),
        'duration_s': positive(10.0),
    },
    'jitter': {
        'enabled': flag(True),
        'location': choice('post_mc', JITTER_LOCATIONS),
        'displacement_level': number(1e-18, 0.0),
        'corner_hz': positive(50.0),
        'floor': optional_number(number(None, 0.0)),
        'mode_shape_level': number(0.0, 0.0),
        'waist_m': positive(300e-6),
        'offset_x_m': number(0.0),
        'offset_y_m': number(0.0),
        'map_rms': number(0.005, 0.0),
        'map_correlation_m': positive(100e-6),
        'map_pitch_m': positive(10e-6),
        'map_cells': positive(200, convert=int),
        'map_seed': number(0, 0, convert=int),
        'map1': Key(str, None),
        'map2': Key(str, None),
    },
    'opo': {
        'enabled': flag(True),
        'pump_ratio': number(0.0, 0.0, 1.0, high_open=True),
        'linewidth_hz': positive(10e6),
        'phase_noise_rms_rad': number(0.0, 0.0),
        'escape': fraction(1.0, low_open=True),
        'propagation': fraction(1.0, low_open=True),
        'visibility': fraction(1.0, low_open=True),
        'quantum_efficiency': fraction(1.0, low_open=True),
    },
    'dither': {
        'enabled': flag(False),
        'frequency_hz': positive(750.0),
        'cycles': number(0.0, 0.0),
    },
    'analysis': {
        'spans': Key(str, '6400:800:200', 'edge:lines:averages, ...'),
        'seed': number(0, 0, convert=int),
        'duration_s': optional_number(positive(None)),
        'outputs': Key(str, 'shot,dark', ', '.join(OUTPUTS)),
        'squeeze_band': Key(str, None, 'low:high in Hz'),
    },
}

REQUIRED_SECTIONS = ('laser', 'homodyne', 'analysis')
PREFIXED_SECTIONS = ('noise', 'scatter')


@dataclass(frozen=True)
class LaserConfig:
    power_w: float
    wavelength_m: float = 1064e-9
    rin_db: Optional[float] = None
    rin_reference_power_w: float = 1e-3
    rin_corner_hz: float = 1e3

    @property
    def local_oscillator(self) -> LocalOscillator:
        return LocalOscillator(self.power_w, self.wavelength_m)

    def rin_psd(self) -> Optional[NoisePsd]:
        """Shot-relative LO amplitude-quadrature PSD at the configured power."""
        if self.rin_db is None:
            return None
        plateau = 1.0 + 10.0 ** (self.rin_db / 10.0)
        return rin_model(plateau, self.rin_corner_hz).scaled_excess(self.power_w / self.rin_reference_power_w)


@dataclass(frozen=True)
class HomodyneConfig:
    optics: HomodyneOptics
    topology: Topology
    g1: float
    g2: float
    auto_balance: bool = True


@dataclass(frozen=True)
class NoiseSource:
    name: str
    port: str
    psd: NoisePsd


@dataclass(frozen=True)
class DustConfig:
    process: DustEventProcess
    location: str = 'arm1'
    monitor_rate_hz: float = 1e3
    duration_s: float = 10.0


@dataclass(frozen=True)
class JitterConfig:
    location: str
    displacement: NoisePsd
    mode_shape_level: float
    waist_m: float
    offset_m: Tuple[float, float]
    map_rms: float
    map_correlation_m: float
    map_pitch_m: float
    map_cells: int
    map_seed: int
    map_files: Tuple[Optional[Path], Optional[Path]] = (None, None)


@dataclass(frozen=True)
class OpoConfig:
    params: OpoParams
    chain: EfficiencyChain


@dataclass(frozen=True)
class AnalysisConfig:
    plan: SpanPlan
    seed: int = 0
    duration_s: Optional[float] = None
    outputs: Tuple[str, ...] = ('shot', 'dark')
    squeeze_band: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; optional blocks are None when absent or disabled."""

    name: str
    laser: LaserConfig
    homodyne: HomodyneConfig
    design: DetectorDesign
    analysis: AnalysisConfig
    modecleaner: Modecleaner = field(default_factory=Modecleaner)
    noise: Tuple[NoiseSource, ...] = ()
    scatter: Tuple[Tuple[str, ScatterPath], ...] = ()
    dust: Optional[DustConfig] = None
    jitter: Optional[JitterConfig] = None
    opo: Optional[OpoConfig] = None
    dither: DitherDrive = field(default_factory=DitherDrive)
    path: Optional[Path] = None

    def with_seed(self, seed: int) -> 'ScenarioConfig':
        return replace(self, analysis=replace(self.analysis, seed=int(seed)))


def list_scenarios() -> List[str]:
    """Stems of the shipped scenarios."""
    root = resources.files('shotflat') / 'scenarios'
    return sorted(p.name[: -len(SCENARIO_SUFFIX)] for p in root.iterdir() if p.name.endswith(SCENARIO_SUFFIX))


def resolve_scenario(name: str) -> Path:
    """Path of a scenario given as a file path or a shipped stem."""
    candidate = Path(name)
    if candidate.exists():
        return candidate
    stem = candidate.name[: -len(SCENARIO_SUFFIX)] if candidate.name.endswith(SCENARIO_SUFFIX) else candidate.name
    shipped = resources.files('shotflat') / 'scenarios' / f'{stem}{SCENARIO_SUFFIX}'
    if shipped.is_file():
        return Path(str(shipped))
    raise ScenarioError(f"scenario not found: {name} (shipped: {', '.join(list_scenarios())})")


def _read_parser(text: str, source: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        comment_prefixes=('#', ';'),
        inline_comment_prefixes=('#',),
        interpolation=None,
        empty_lines_in_values=False,
    )
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ScenarioParseError("expected a [section] header first", e.lineno) from e
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as e:
        raise ScenarioParseError(e.message.split(': ', 1)[-1], e.lineno) from e
    except configparser.ParsingError as e:
        lineno, line = e.errors[0]
        raise ScenarioParseError(f"cannot parse {line.strip()!r}", lineno) from e
    return parser


def _values(parser: configparser.ConfigParser, section: str, schema: Dict[str, Key], strict: bool) -> Dict[str, Any]:
    """Converted and range-checked values of one section, defaults filled in."""
    out = {key: spec.default for key, spec in schema.items()}
    if not parser.has_section(section):
        return out
    for key, raw in parser.items(section):
        spec = schema.get(key)
        if spec is None:
            message = f"[{section}] unknown key {key!r}"
            if strict:
                raise ScenarioError(message)
            log.warning("%s (ignored)", message)
            continue
        qualified = f"{section}.{key}"
        try:
            value = spec.convert(raw)
        except ValueError:
            raise ValidationError(qualified, raw, spec.allowed)
        if not spec.check(value):
            raise ValidationError(qualified, value, spec.allowed)
        out[key] = value
    return out


def parse_spans(text: str) -> SpanPlan:
    """``edge:lines:averages`` entries separated by commas."""
    spans = []
    for item in filter(None, (part.strip() for part in text.split(','))):
        fields = item.split(':')
        if len(fields) != 3:
            raise ValidationError('analysis.spans', item, 'edge:lines:averages')
        try:
            spans.append(Span(float(fields[0]), int(fields[1]), int(fields[2])))
        except ValueError:
            raise ValidationError('analysis.spans', item, 'edge:lines:averages')
    try:
        return SpanPlan(tuple(spans))
    except DomainError as e:
        raise ValidationError('analysis.spans', text, str(e))


def _parse_band(text: Optional[str]) -> Optional[Tuple[float, float]]:
    if text is None:
        return None
    try:
        low, high = (float(v) for v in text.split(':'))
    except ValueError:
        raise ValidationError('analysis.squeeze_band', text, 'low:high in Hz')
    if not 0 < low < high:
        raise ValidationError('analysis.squeeze_band', text, '0 < low < high')
    return low, high


def _build(section: str, build: Callable):
    try:
        return build()
    except DomainError as e:
        raise ScenarioError(f"[{section}] {e}") from e


def _homodyne(values: Dict[str, Any]) -> HomodyneConfig:
    topology = Topology(values['topology'])
    g1, g2 = values['g1'], values['g2']
    if values['g'] is not None:
        g1 = g2 = values['g']
    if topology is Topology.CURRENT_SUBTRACTING and g1 != g2:
        raise ValidationError('homodyne.g2', g2, 'equal to g1 for current_subtracting')
    optics = HomodyneOptics(values['eta_bs'], values['eta_l'], values['eta_pd1'], values['eta_pd2'])
    return HomodyneConfig(optics, topology, g1, g2, values['auto_balance'])


def _noise_source(name: str, values: Dict[str, Any]) -> NoiseSource:
    psd = NoisePsd(
        NoiseKind(values['kind']),
        level=values['level'],
        reference_frequency=values['reference_frequency'],
        exponent=values['exponent'],
        corner_hz=values['corner_hz'],
    )
    return NoiseSource(name, values['port'], psd)


def _scatter_path(values: Dict[str, Any]) -> ScatterPath:
    return ScatterPath(
        values['fraction'],
        ScatterLocation(values['location']),
        vibration(values['displacement_level'], values['corner_hz'], values['floor']),
        values['static_phase'],
        values['isolation_db'],
    )


def _jitter(values: Dict[str, Any], base: Optional[Path]) -> JitterConfig:
    def locate(entry):
        if entry is None:
            return None
        p = Path(entry)
        return p if p.is_absolute() or base is None else base / p

    mode_shape = values['mode_shape_level']
    return JitterConfig(
        location=values['location'],
        displacement=vibration(values['displacement_level'], values['corner_hz'], values['floor']),
        mode_shape_level=mode_shape,
        waist_m=values['waist_m'],
        offset_m=(values['offset_x_m'], values['offset_y_m']),
        map_rms=values['map_rms'],
        map_correlation_m=values['map_correlation_m'],
        map_pitch_m=values['map_pitch_m'],
        map_cells=values['map_cells'],
        map_seed=values['map_seed'],
        map_files=(locate(values['map1']), locate(values['map2'])),
    )


def parse_scenario_text(text: str, name: str = 'scenario', base: Optional[Path] = None, strict: bool = True) -> ScenarioConfig:
    """Parse scenario text; see ``parse_scenario``."""
    parser = _read_parser(text, name)

    for section in parser.sections():
        family = section.split('.', 1)[0]
        known = section in SCHEMA and family not in PREFIXED_SECTIONS
        known = known or (family in PREFIXED_SECTIONS and '.' in section)
        if not known:
            message = f"unknown section [{section}]"
            if strict:
                raise ScenarioError(message)
            log.warning("%s (ignored)", message)
    for section in REQUIRED_SECTIONS:
        if not parser.has_section(section):
            raise ScenarioError(f"missing required section [{section}]")

    v = {s: _values(parser, s, SCHEMA[s], strict) for s in SCHEMA if s not in PREFIXED_SECTIONS}

    laser = LaserConfig(
        v['laser']['power_w'],
        v['laser']['wavelength_m'],
        v['laser']['rin_db'],
        v['laser']['rin_reference_power_w'],
        v['laser']['rin_corner_hz'],
    )
    homodyne = _build('homodyne', lambda: _homodyne(v['homodyne']))

    e = v['electronics']
    design = _build('electronics', lambda: DetectorDesign(
        topology=homodyne.topology,
        g1=homodyne.g1,
        g2=homodyne.g2,
        resistor_type=ResistorType(e['resistor_type']),
        dark_settings=DarkSettings(
            e['dark_clearance_db'],
            e['dark_reference_power_w'],
            e['dark_corner_hz'],
        ),
        responsivity=e['responsivity'],
        flicker_index=e['flicker_index'],
    ))

    mc = v['modecleaner']
    modecleaner = Modecleaner(mc['linewidth_hz'], mc['hom_suppression'], mc['waist_m'], mc['enabled'])

    noise = []
    scatter = []
    for section in parser.sections():
        family, _, label = section.partition('.')
        if family == 'noise' and label:
            values = _values(parser, section, SCHEMA['noise'], strict)
            noise.append(_build(section, lambda: _noise_source(label, values)))
        elif family == 'scatter' and label:
            values = _values(parser, section, SCHEMA['scatter'], strict)
            scatter.append((label, _build(section, lambda: _scatter_path(values))))

    dust = None
    if parser.has_section('dust') and v['dust']['enabled']:
        d = v['dust']
        process = _build('dust', lambda: DustEventProcess(
            d['rate_hz'], d['depth_min'], d['depth_max'], d['duration_min_s'], d['duration_max_s'], d['pulse_shape']
        ))
        dust = DustConfig(process, d['location'], d['monitor_rate_hz'], d['duration_s'])

    jitter = None
    if parser.has_section('jitter') and v['jitter']['enabled']:
        jitter = _jitter(v['jitter'], base)

    opo = None
    if parser.has_section('opo') and v['opo']['enabled']:
        o = v['opo']
        opo = OpoConfig(
            OpoParams(o['pump_ratio'], o['linewidth_hz'], o['phase_noise_rms_rad']),
            EfficiencyChain(o['escape'], o['propagation'], o['visibility'], o['quantum_efficiency']),
        )

    dv = v['dither']
    dither = DitherDrive(dv['frequency_hz'], dv['cycles'], dv['enabled'])

    a = v['analysis']
    outputs = tuple(filter(None, (o.strip() for o in a['outputs'].split(','))))
    for output in outputs:
        if output not in OUTPUTS:
            raise ValidationError('analysis.outputs', output, SCHEMA['analysis']['outputs'].allowed)
    if any(o in ('squeezing', 'anti_squeezing') for o in outputs) and opo is None:
        raise ScenarioError("squeezing outputs need an enabled [opo] section")
    analysis = AnalysisConfig(parse_spans(a['spans']), a['seed'], a['duration_s'], outputs, _parse_band(a['squeeze_band']))

    log.info("parsed scenario %s: %d spans, outputs %s", name, len(analysis.plan), ', '.join(outputs))
    return ScenarioConfig(
        name=name,
        laser=laser,
        homodyne=homodyne,
        design=design,
        analysis=analysis,
        modecleaner=modecleaner,
        noise=tuple(noise),
        scatter=tuple(scatter),
        dust=dust,
        jitter=jitter,
        opo=opo,
        dither=dither,
    )


def parse_scenario(path: Path, strict: bool = True) -> ScenarioConfig:
    """Read and validate a scenario file.

    Args:
        path: Scenario file, or the stem of a shipped scenario
        strict: Treat unknown sections and keys as errors instead of warnings

    Returns:
        Validated configuration with defaults filled in

    Raises:
        ScenarioParseError: For malformed lines (carries the line number)
        ValidationError: For values outside their allowed range
        ScenarioError: For missing or unknown sections and keys
    """
    path = resolve_scenario(str(path))
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e}") from e
    name = path.name[: -len(SCENARIO_SUFFIX)] if path.name.endswith(SCENARIO_SUFFIX) else path.stem
    config = parse_scenario_text(text, name, path.parent, strict)
    return replace(config, path=path)
