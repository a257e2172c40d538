"""Experiment orchestration: analytic budget and time-domain Monte-Carlo runs.

Both paths evaluate the same bins for every span of the plan and stitch them
into one trace per requested output. Outputs are reported relative to the
analytic quantum shot-noise level of the configured detector.
"""

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .electronics import DetectorDesign, dark_clearance_db, detector_output, flicker_psd, flux_to_current
from .errors import DomainError, FeasibilityError
from .fields import (
    PORTS,
    VACUUM_PSD,
    CouplingCoefficients,
    DifferentialCoefficients,
    HomodyneOptics,
    LocalOscillator,
    SignalField,
    apply_balance,
    cmrr_db,
    derive_coefficients,
    photon_energy,
    shot_floor,
    subtract_output,
)
from .noise import (
    PsdLike,
    ScaledPsd,
    SumPsd,
    TimeSeries,
    draw_dust_events,
    render_dust_events,
    shaped_noise,
    white,
)
from .pointing import (
    BeamProfile,
    JitterProcess,
    PhotodiodeMap,
    diode_coefficients,
    load_map,
    modecleaner_filter,
    synthetic_map,
)
from .scatter import DitherScanPoint, ScatterLocation, dither_amplitude_scan, synthesize_fringe
from .scenario import ScenarioConfig
from .spectral import (
    ELECTRONIC,
    Span,
    SpectrumTrace,
    Units,
    analytic_budget,
    band_mean_db,
    dark_correct,
    normalize_to_shot,
    required_samples,
    segment_length,
    stitch_spans,
    welch_psd,
    write_trace_csv,
)
from .squeezing import EfficiencyChain, SqueezingPrediction, predict_levels, squeezed_signal_psd
from .utils import stream_rng

log = logging.getLogger(__name__)

OVERSAMPLING = 4
SQUEEZED_ANGLE = 0.0
ANTI_SQUEEZED_ANGLE = math.pi / 2
OUTPUT_INDEX = {'shot': 0, 'dark': 1, 'squeezing': 2, 'anti_squeezing': 3, 'diode1': 4}

# random stream keys below the (span, output) prefix
PORT_STREAMS = {p: i for i, p in enumerate(PORTS)}
DUST_STREAM = 10
JITTER_STREAM = 20
SCATTER_STREAM = 30
ELECTRONICS_STREAM = 60


@dataclass(frozen=True)
class JitterCoupling:
    """Fractional photocurrent change per unit jitter, per diode (x, y, waist)."""

    diode1: Tuple[float, float, float]
    diode2: Tuple[float, float, float]
    process: JitterProcess
    common_intensity: Optional[PsdLike] = None


@dataclass(frozen=True)
class Setup:
    """Everything derived once from a scenario before any span is evaluated."""

    config: ScenarioConfig
    lo: LocalOscillator
    optics: HomodyneOptics
    design: DetectorDesign
    coeffs: CouplingCoefficients
    reference: CouplingCoefficients
    diff: DifferentialCoefficients
    quantum_scale: float
    quantum_shot: float
    jitter: Optional[JitterCoupling] = None

    @property
    def dc_currents(self) -> Tuple[float, float]:
        """Mean photocurrents in A."""
        return flux_to_current(self.coeffs.dc_flux(1)), flux_to_current(self.coeffs.dc_flux(2))


@dataclass(eq=False)
class RunReport:
    """Result of one run: stitched traces, DC monitor and derived scalars."""

    scenario: str
    mode: str
    seed: int
    traces: Dict[str, SpectrumTrace] = field(default_factory=dict)
    psds: Dict[str, SpectrumTrace] = field(default_factory=dict)
    dc_monitor: Optional[TimeSeries] = None
    scalars: Dict[str, float] = field(default_factory=dict)

    def summary(self) -> Dict:
        return {
            'scenario': self.scenario,
            'mode': self.mode,
            'seed': self.seed,
            'scalars': {k: float(v) for k, v in self.scalars.items()},
            'traces': {
                name: {
                    'bins': len(trace),
                    'low_hz': float(trace.frequencies[0]),
                    'high_hz': float(trace.frequencies[-1]),
                    'seams_hz': [float(s) for s in trace.seams],
                }
                for name, trace in self.traces.items()
            },
        }

    def write(self, out_dir: Path) -> List[Path]:
        """Write one CSV per trace, the DC monitor and ``report.yaml``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, trace in self.traces.items():
            written.append(write_trace_csv(trace, out_dir / f'{name}.csv'))
        for name, trace in self.psds.items():
            written.append(write_trace_csv(trace, out_dir / f'{name}_psd.csv'))
        if self.dc_monitor is not None:
            written.append(write_dc_monitor(self.dc_monitor, out_dir / 'dc_monitor.csv'))
        report = out_dir / 'report.yaml'
        report.write_text(yaml.safe_dump(self.summary(), sort_keys=False), encoding='utf-8')
        written.append(report)
        return written


def write_dc_monitor(series: TimeSeries, path: Path) -> Path:
    with Path(path).open('w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['time_s', 'volts'])
        for t, v in zip(series.times(), series.samples):
            writer.writerow([repr(float(t)), repr(float(v))])
    return Path(path)


def _detector_map(config: ScenarioConfig, index: int, nominal: float) -> PhotodiodeMap:
    jitter = config.jitter
    path = jitter.map_files[index - 1]
    if path is not None:
        return load_map(path)
    return synthetic_map(
        jitter.map_cells,
        jitter.map_cells,
        jitter.map_pitch_m,
        nominal=nominal,
        rms=jitter.map_rms,
        correlation_m=jitter.map_correlation_m,
        seed=jitter.map_seed + index,
    )


def _jitter_coupling(config: ScenarioConfig) -> Optional[JitterCoupling]:
    jitter = config.jitter
    if jitter is None:
        return None
    optics = config.homodyne.optics
    maps = (_detector_map(config, 1, optics.eta_pd1), _detector_map(config, 2, optics.eta_pd2))
    beam = BeamProfile(jitter.waist_m, *jitter.offset_m)
    k1, k2 = diode_coefficients(maps, beam)
    mode_shape = white(jitter.mode_shape_level) if jitter.mode_shape_level > 0 else None
    process = JitterProcess(jitter.displacement, jitter.displacement, mode_shape)
    common = None
    if jitter.location == 'pre_mc' and config.modecleaner.enabled:
        filtered = modecleaner_filter(process, config.modecleaner)
        process, common = filtered.residual, filtered.converted_intensity
    log.debug("jitter coupling: diode1 %s, diode2 %s", k1, k2)
    return JitterCoupling(k1, k2, process, common)


def prepare(config: ScenarioConfig) -> Setup:
    """Balance the detector and derive its coefficients.

    Balancing happens without the static arm loss, which is then applied on
    top, so ``homodyne.eta_l`` behaves like loss that appears after the
    detector was nulled.
    """
    h = config.homodyne
    lo = config.laser.local_oscillator
    clean = replace(h.optics, eta_l=0.0)
    if h.auto_balance:
        balanced, g1, g2 = apply_balance(clean, h.topology, h.g1, h.g2)
    else:
        balanced, g1, g2 = clean, h.g1, h.g2
    optics = replace(balanced, eta_l=h.optics.eta_l)

    reference = derive_coefficients(lo, balanced)
    coeffs = derive_coefficients(lo, optics)
    diff = subtract_output(coeffs, g1, g2, h.topology)
    quantum_scale = VACUUM_PSD * flux_to_current(1.0) ** 2
    design = config.design.with_gains(g1, g2)
    return Setup(
        config=config,
        lo=lo,
        optics=optics,
        design=design,
        coeffs=coeffs,
        reference=reference,
        diff=diff,
        quantum_scale=quantum_scale,
        quantum_shot=shot_floor(diff) * quantum_scale,
        jitter=_jitter_coupling(config),
    )


def _signal_chain(config: ScenarioConfig) -> EfficiencyChain:
    """OPO chain without the photodiode efficiency, which the homodyne optics apply."""
    return replace(config.opo.chain, quantum_efficiency=1.0)


def signal_field(config: ScenarioConfig, output: str) -> SignalField:
    """Field at the signal port: squeezed vacuum for the squeezing outputs, vacuum otherwise."""
    if output in ('squeezing', 'anti_squeezing'):
        if config.opo is None:
            raise DomainError(f"output {output!r} needs an [opo] section")
        return SignalField.squeezed(config.opo.params)
    return SignalField()


def port_psds(config: ScenarioConfig, output: str) -> Dict[str, PsdLike]:
    """Shot-relative PSD of every quadrature port for one output.

    Ports start at vacuum (1.0); the laser RIN replaces the LO level and
    ``noise.*`` sections on quadrature ports add excess on top.
    """
    psds: Dict[str, List[PsdLike]] = {p: [white(1.0)] for p in PORTS}
    rin = config.laser.rin_psd()
    if rin is not None:
        psds['lo'] = [rin]
    signal = signal_field(config, output)
    if signal.is_squeezed:
        angle = SQUEEZED_ANGLE if output == 'squeezing' else ANTI_SQUEEZED_ANGLE
        psds['signal'] = [squeezed_signal_psd(signal.squeeze_params, _signal_chain(config), angle)]
    for source in config.noise:
        if source.port != ELECTRONIC:
            psds[source.port].append(source.psd)
    return {p: parts[0] if len(parts) == 1 else SumPsd(tuple(parts)) for p, parts in psds.items()}


def _output_coefficients(setup: Setup, output: str) -> DifferentialCoefficients:
    if output != 'diode1':
        return setup.diff
    d1 = setup.coeffs.diode1
    g1 = setup.diff.g1
    return DifferentialCoefficients(
        g1=g1,
        g2=0.0,
        topology=setup.diff.topology,
        dc=g1 * d1.dc,
        alpha=setup.coeffs.alpha,
        **{p: g1 * d1.port(p) for p in PORTS},
    )


def _electronic_sources(setup: Setup, output: str) -> List[Tuple[str, PsdLike]]:
    design = setup.design
    config = setup.config
    i1, i2 = setup.dc_currents
    if output == 'diode1':
        i2 = 0.0
    g2 = 0.0 if output == 'diode1' else design.g2
    sources = [(ELECTRONIC, flicker_psd(design, i1, i2)), (ELECTRONIC, design.dark)]
    sources += [(ELECTRONIC, s.psd) for s in config.noise if s.port == ELECTRONIC]

    jitter = setup.jitter
    if jitter is not None:
        a1, a2 = design.g1 * i1, g2 * i2
        x_psd, y_psd = jitter.process.axes
        kx = a1 * jitter.diode1[0] - a2 * jitter.diode2[0]
        ky = a1 * jitter.diode1[1] - a2 * jitter.diode2[1]
        sources.append((ELECTRONIC, ScaledPsd(x_psd, kx ** 2)))
        sources.append((ELECTRONIC, ScaledPsd(y_psd, ky ** 2)))
        if jitter.process.mode_shape_psd is not None:
            kw = a1 * jitter.diode1[2] - a2 * jitter.diode2[2]
            sources.append((ELECTRONIC, ScaledPsd(jitter.process.mode_shape_psd, kw ** 2)))
        if jitter.common_intensity is not None:
            sources.append((ELECTRONIC, ScaledPsd(jitter.common_intensity, (a1 - a2) ** 2)))
    return sources


def _span_frequencies(span: Span) -> np.ndarray:
    # bins 0 and 1 are dropped when stitching
    return np.arange(2, span.lines + 1) * span.rbw_hz


def budget_span(setup: Setup, span: Span, output: str) -> SpectrumTrace:
    """Analytic output PSD (V^2/Hz) on the analyzer bins of one span."""
    frequencies = _span_frequencies(span)
    if output == 'dark':
        values = setup.design.dark(frequencies)
        for source in setup.config.noise:
            if source.port == ELECTRONIC:
                values = values + source.psd(frequencies)
        return SpectrumTrace(frequencies, values, span.rbw_hz, 0)
    sources = list(port_psds(setup.config, output).items())
    sources += _electronic_sources(setup, output)
    return analytic_budget(_output_coefficients(setup, output), sources, frequencies, setup.quantum_scale, span.rbw_hz)


def _shot_trace(setup: Setup, trace: SpectrumTrace) -> SpectrumTrace:
    return SpectrumTrace(trace.frequencies, np.full(len(trace), setup.quantum_shot), trace.rbw_hz, trace.averages, Units.V2_PER_HZ, trace.seams)


def _scalars(setup: Setup, report: RunReport) -> None:
    config = setup.config
    scalars = report.scalars
    scalars['cmrr_db'] = cmrr_db(setup.diff, setup.reference)
    scalars['quantum_shot_v2_per_hz'] = setup.quantum_shot
    scalars['dark_clearance_db'] = dark_clearance_db(setup.design, config.laser.power_w)
    if config.dust is not None:
        scalars['cmrr_dust_peak_db'] = _dust_peak_cmrr(setup)

    traces = report.traces
    if 'dark' in traces:
        above = traces['dark'].frequencies >= 100.0
        values = traces['dark'].values[above] if np.any(above) else traces['dark'].values
        scalars['dark_clearance_measured_db'] = float(-values.mean())
    band = config.analysis.squeeze_band
    if band is not None:
        for name in ('squeezing', 'anti_squeezing'):
            if name in traces:
                scalars[f'{name}_mean_db'] = band_mean_db(traces[name], *band)
        if 'squeezing' in traces and 'dark' in traces:
            dark = band_mean_db(traces['dark'], *band)
            try:
                scalars['squeezing_dark_corrected_db'] = dark_correct(scalars['squeezing_mean_db'], dark)
            except DomainError as e:
                log.warning("dark correction skipped: %s", e)


def _finish(setup: Setup, mode: str, per_output: Dict[str, List[SpectrumTrace]]) -> RunReport:
    config = setup.config
    report = RunReport(config.name, mode, config.analysis.seed)
    for output, traces in per_output.items():
        psd = stitch_spans(traces)
        report.psds[output] = psd
        report.traces[output] = normalize_to_shot(psd, _shot_trace(setup, psd))
    _scalars(setup, report)
    return report


def run_budget(config: ScenarioConfig) -> RunReport:
    """Analytic path: coefficient^2 x PSD per port, stationary sources only.

    Args:
        config: Parsed scenario

    Returns:
        Report with one stitched, shot-normalized trace per output
    """
    skipped = [name for name, present in (
        ('scatter', bool(config.scatter)),
        ('dust', config.dust is not None),
        ('dither', config.dither.enabled),
    ) if present]
    if skipped:
        log.warning("analytic budget ignores non-stationary blocks: %s", ', '.join(skipped))

    setup = prepare(config)
    per_output = {
        output: [budget_span(setup, span, output) for span in config.analysis.plan]
        for output in config.analysis.outputs
    }
    report = _finish(setup, 'budget', per_output)
    log.info("budget for %s: %d outputs", config.name, len(per_output))
    return report


def _lowpass(series: np.ndarray, fs: float, transfer) -> np.ndarray:
    """Apply a power transfer function to a real record in the frequency domain."""
    spectrum = np.fft.rfft(series)
    freqs = np.fft.rfftfreq(series.size, d=1.0 / fs)
    return np.fft.irfft(spectrum * np.sqrt(transfer(freqs)), n=series.size)


def _modulations(setup: Setup, n: int, fs: float, seed_keys: Tuple[int, ...]):
    """Time-varying multipliers and additive scatter flux for both diodes."""
    config = setup.config
    seed = config.analysis.seed
    m1 = np.ones(n)
    m2 = np.ones(n)
    add1 = np.zeros(n)
    add2 = np.zeros(n)
    duration = n / fs

    if config.dust is not None:
        events = draw_dust_events(config.dust.process, duration, stream_rng(seed, *seed_keys, DUST_STREAM))
        loss = render_dust_events(events, duration, fs, config.dust.process.pulse_shape, seed).samples[:n]
        m1 *= 1.0 - loss
        if config.dust.location == 'common':
            m2 *= 1.0 - loss

    common = np.zeros(n)
    hv = photon_energy(setup.lo.wavelength_m)
    optics = setup.optics
    dither = config.dither if config.dither.enabled else None
    for k, (_, path) in enumerate(config.scatter):
        rng = stream_rng(seed, *seed_keys, SCATTER_STREAM + k)
        dp1, dp2 = synthesize_fringe(path, setup.lo.power_w, n, fs, rng, dither, seed)
        if path.location.is_common:
            relative = dp1 / setup.lo.power_w
            if path.location is ScatterLocation.LO_PATH_PRE_MC and config.modecleaner.enabled:
                relative = _lowpass(relative, fs, config.modecleaner.lowpass)
            common += relative
        else:
            add1 += optics.eta_pd1 * dp1 / hv
            add2 += optics.eta_pd2 * dp2 / hv

    jitter = setup.jitter
    if jitter is not None:
        rng = stream_rng(seed, *seed_keys, JITTER_STREAM)
        x_psd, y_psd = jitter.process.axes
        x = shaped_noise(x_psd, n, fs, rng)
        y = shaped_noise(y_psd, n, fs, rng)
        w = shaped_noise(jitter.process.mode_shape_psd, n, fs, rng) if jitter.process.mode_shape_psd is not None else np.zeros(n)
        m1 *= 1.0 + jitter.diode1[0] * x + jitter.diode1[1] * y + jitter.diode1[2] * w
        m2 *= 1.0 + jitter.diode2[0] * x + jitter.diode2[1] * y + jitter.diode2[2] * w
        if jitter.common_intensity is not None:
            common += shaped_noise(jitter.common_intensity, n, fs, rng)

    m1 *= 1.0 + common
    m2 *= 1.0 + common
    return m1, m2, add1, add2


def simulate_span(config: ScenarioConfig, span_index: int, output: str) -> SpectrumTrace:
    """Monte-Carlo estimate of one output on one span (V^2/Hz).

    The record is built from independent random streams keyed by
    (seed, span, output, source), so any process may evaluate any span.
    """
    setup = prepare(config)
    span = config.analysis.plan.spans[span_index]
    fs, n = span_record(config, span)
    keys = (span_index, OUTPUT_INDEX[output])
    seed = config.analysis.seed

    if output == 'dark':
        i1 = TimeSeries(np.zeros(n), fs, seed)
        i2 = TimeSeries(np.zeros(n), fs, seed)
    else:
        psds = port_psds(config, output)
        quadratures = {
            p: shaped_noise(ScaledPsd(psds[p], VACUUM_PSD), n, fs, stream_rng(seed, *keys, PORT_STREAMS[p]))
            for p in PORTS
        }
        m1, m2, add1, add2 = _modulations(setup, n, fs, keys)
        flux = []
        for index, (modulation, additive) in enumerate(((m1, add1), (m2, add2)), start=1):
            diode = setup.coeffs.diode(index)
            mean = setup.coeffs.dc_flux(index) * modulation
            fluctuation = sum(diode.port(p) * quadratures[p] for p in PORTS)
            flux.append(mean + fluctuation + additive)
        i1 = TimeSeries(flux_to_current(flux[0]), fs, seed)
        i2 = TimeSeries(flux_to_current(flux[1]), fs, seed)
        if output == 'diode1':
            i2 = TimeSeries(np.zeros(n), fs, seed)

    detector = detector_output(setup.design, i1, i2, stream_rng(seed, *keys, ELECTRONICS_STREAM))
    volts = detector.differential
    extra = [s.psd for s in config.noise if s.port == ELECTRONIC]
    if extra:
        added = shaped_noise(SumPsd(tuple(extra)), n, fs, stream_rng(seed, *keys, ELECTRONICS_STREAM + 1))
        volts = TimeSeries(volts.samples + added, fs, seed)
    trace = welch_psd(volts, span.edge_hz, span.lines, span.averages)
    log.debug("span %d (%s): %d samples at %.6g Hz", span_index, output, n, fs)
    return trace


def span_record(config: ScenarioConfig, span: Span) -> Tuple[float, int]:
    fs = OVERSAMPLING * span.edge_hz
    needed = required_samples(segment_length(fs, span.edge_hz, span.lines), span.averages)
    duration = config.analysis.duration_s
    if duration is None:
        return fs, needed
    n = int(round(duration * fs))
    if n < needed:
        raise FeasibilityError(
            f"span {span.edge_hz:g} Hz with {span.averages} averages needs {needed / fs:.6g} s, "
            f"analysis.duration_s is {duration:g} s"
        )
    return fs, n


def _simulate_job(args):
    config, span_index, output = args
    return simulate_span(config, span_index, output)


def run_monte_carlo(config: ScenarioConfig, workers: int = 1) -> RunReport:
    """Time-domain path including dust, scatter, dither and jitter.

    Args:
        config: Parsed scenario
        workers: Processes used across (span, output) jobs; results do not
            depend on this

    Returns:
        Report with stitched traces and, when dust is configured, the DC monitor

    Raises:
        FeasibilityError: If the configured duration cannot hold the averages
    """
    plan = config.analysis.plan
    for span in plan:
        span_record(config, span)

    jobs = [(config, i, output) for output in config.analysis.outputs for i in range(len(plan))]
    log.info("simulating %s: %d spans x %d outputs on %d worker(s)", config.name, len(plan), len(config.analysis.outputs), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_job, jobs))
    else:
        results = [_simulate_job(job) for job in jobs]

    per_output: Dict[str, List[SpectrumTrace]] = {}
    for (_, _, output), trace in zip(jobs, results):
        per_output.setdefault(output, []).append(trace)

    setup = prepare(config)
    report = _finish(setup, 'monte_carlo', per_output)
    if config.dust is not None:
        report.dc_monitor = dc_monitor(setup)
    return report


def dc_monitor(setup: Setup) -> TimeSeries:
    """Subtracted DC voltage while dust crosses the beams.

    The monitor is its own realization of the dust process, drawn from the
    ``(seed, DUST_STREAM)`` stream over ``dust.duration_s`` at
    ``dust.monitor_rate_hz``. Spectral spans draw independent events with
    the same statistics from their per-span streams, so dips on the monitor
    do not line up with features in any one span.
    """
    config = setup.config
    dust = config.dust
    seed = config.analysis.seed
    events = draw_dust_events(dust.process, dust.duration_s, stream_rng(seed, DUST_STREAM))
    loss = render_dust_events(events, dust.duration_s, dust.monitor_rate_hz, dust.process.pulse_shape, seed).samples
    v1, v2 = (g * i for g, i in zip((setup.design.g1, setup.design.g2), setup.dc_currents))
    if dust.location == 'common':
        volts = (v1 - v2) * (1.0 - loss)
    else:
        volts = v1 * (1.0 - loss) - v2
    log.info("dust monitor: %d events over %.3g s", len(events), dust.duration_s)
    return TimeSeries(volts, dust.monitor_rate_hz, seed)


def run_dust_monitor(config: ScenarioConfig) -> RunReport:
    """DC monitor only, with the event count and largest excursion."""
    if config.dust is None:
        raise DomainError(f"scenario {config.name} has no [dust] section")
    setup = prepare(config)
    monitor = dc_monitor(setup)
    i1, i2 = setup.dc_currents
    baseline = setup.design.g1 * i1 - setup.design.g2 * i2
    excursion = np.abs(monitor.samples - baseline)
    threshold = 1e-6 * setup.design.g1 * i1
    above = excursion > threshold
    dips = int(np.count_nonzero(above[1:] & ~above[:-1]) + (1 if above[0] else 0))
    report = RunReport(config.name, 'dust_monitor', config.analysis.seed, dc_monitor=monitor)
    report.scalars.update({
        'dips': float(dips),
        'max_excursion_v': float(excursion.max()),
        'single_diode_dc_v': float(setup.design.g1 * i1),
    })
    return report


def run_cmrr(config: ScenarioConfig) -> Dict[str, float]:
    """CMRR of the configured detector and the balance it was nulled with."""
    setup = prepare(config)
    out = {
        'cmrr_db': cmrr_db(setup.diff, setup.reference),
        'g1': setup.diff.g1,
        'g2': setup.diff.g2,
        'eta_bs': setup.optics.eta_bs,
        'eta_l': config.homodyne.optics.eta_l,
    }
    if config.dust is not None:
        out['cmrr_dust_peak_db'] = _dust_peak_cmrr(setup)
    return out


def _dust_peak_cmrr(setup: Setup) -> float:
    optics = replace(setup.optics, eta_l=setup.config.dust.process.depth_max)
    diff = subtract_output(derive_coefficients(setup.lo, optics), setup.diff.g1, setup.diff.g2, setup.diff.topology)
    return cmrr_db(diff, setup.reference)


def run_dither_scan(config: ScenarioConfig, cycles: Sequence[float]) -> List[DitherScanPoint]:
    """Residual low-band fringe power of the first scatter path per dither amplitude."""
    if not config.scatter:
        raise DomainError(f"scenario {config.name} has no [scatter.*] section")
    name, path = config.scatter[0]
    plan = config.analysis.plan
    frequency = config.dither.frequency_hz
    span = next((s for s in plan if s.edge_hz > 2.0 * frequency), plan.spans[-1])
    setup = prepare(config)
    log.info("dither scan on scatter.%s at %.4g Hz over %s cycles", name, frequency, list(cycles))
    return dither_amplitude_scan(
        path,
        setup.lo.power_w,
        frequency,
        list(cycles),
        span,
        config.analysis.seed,
        cmrr_db(setup.diff, setup.reference),
    )


def predict_squeezing(config: ScenarioConfig) -> SqueezingPrediction:
    if config.opo is None:
        raise DomainError(f"scenario {config.name} has no enabled [opo] section")
    return predict_levels(config.opo.params, config.opo.chain)
