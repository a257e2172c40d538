"""Parasitic interferometers and the cyclic-averaging dither diagnostic.

Scattered light re-entering the beam beats with the local oscillator:

    dP(t) = 2 * sqrt(P_lo * P_sc) * cos(phi(t) + phi_dither(t) + phi0)

where phi = 4 pi / lambda * x(t) for a retro-reflecting surface moving by x.
Where the scatter re-enters sets how the beat lands on the two diodes.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from .errors import DomainError, LinearizationError
from .fields import WAVELENGTH_M, photon_energy
from .noise import PsdLike, TimeSeries, shaped_noise
from .spectral import Span, SpectrumTrace, Units, band_power, required_samples, segment_length, welch_psd
from .utils import stream_rng

log = logging.getLogger(__name__)

MAX_SCATTER_FRACTION = 0.01

# dithered fringes are synthesized up to this harmonic of the dither, then decimated
DITHER_HARMONICS = 64


class ScatterLocation(str, Enum):
    ARM1 = 'arm1'
    LO_PATH_PRE_BS = 'lo_path_pre_bs'
    LO_PATH_PRE_MC = 'lo_path_pre_mc'
    SIGNAL_PORT = 'signal_port'

    @property
    def signature(self) -> Tuple[float, float]:
        """Sign of the beat on diode 1 and diode 2."""
        return _SIGNATURES[self]

    @property
    def is_common(self) -> bool:
        return self in (ScatterLocation.LO_PATH_PRE_BS, ScatterLocation.LO_PATH_PRE_MC)


_SIGNATURES = {
    ScatterLocation.ARM1: (1.0, 0.0),
    ScatterLocation.LO_PATH_PRE_BS: (1.0, 1.0),
    ScatterLocation.LO_PATH_PRE_MC: (1.0, 1.0),
    ScatterLocation.SIGNAL_PORT: (1.0, -1.0),
}


class Channel(str, Enum):
    DIFFERENTIAL = 'differential'
    DIODE1 = 'diode1'
    DIODE2 = 'diode2'


@dataclass(frozen=True)
class ScatterPath:
    """One scattering surface.

    ``phase_process`` is the displacement PSD of the surface in m^2/Hz. When
    ``static_fringe_phase`` is None it is drawn uniformly per seed.
    ``isolation_db`` attenuates the scattered power (e.g. a Faraday isolator).
    """

    backscatter_power_fraction: float
    location: ScatterLocation
    phase_process: PsdLike
    static_fringe_phase: Optional[float] = None
    isolation_db: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'location', ScatterLocation(self.location))
        if not 0.0 <= self.backscatter_power_fraction < 1.0:
            raise DomainError(f"backscatter_power_fraction = {self.backscatter_power_fraction} outside [0, 1)")
        if self.isolation_db < 0:
            raise DomainError(f"isolation must be >= 0 dB, got {self.isolation_db}")

    @property
    def effective_fraction(self) -> float:
        return self.backscatter_power_fraction * 10.0 ** (-self.isolation_db / 10.0)

    def fringe_phase(self, seed: int) -> float:
        if self.static_fringe_phase is not None:
            return self.static_fringe_phase
        return float(stream_rng(seed, 0x5C).uniform(0.0, 2.0 * math.pi))


@dataclass(frozen=True)
class DitherDrive:
    """Triangle sweep of the scattered-light phase by ``cycles`` fringes peak to peak."""

    frequency_hz: float = 750.0
    cycles: float = 0.0
    enabled: bool = False
    waveform: str = 'triangle'

    def __post_init__(self):
        if self.waveform != 'triangle':
            raise DomainError(f"unsupported dither waveform {self.waveform!r}, only 'triangle'")
        if not self.frequency_hz > 0:
            raise DomainError(f"dither frequency must be positive, got {self.frequency_hz}")
        if self.cycles < 0:
            raise DomainError(f"dither amplitude must be >= 0 cycles, got {self.cycles}")

    def phase(self, t: np.ndarray) -> np.ndarray:
        if not self.enabled or self.cycles == 0:
            return np.zeros_like(t, dtype=float)
        frac = np.mod(np.asarray(t, dtype=float) * self.frequency_hz, 1.0)
        tri = 2.0 * np.abs(2.0 * frac - 1.0) - 1.0
        return math.pi * self.cycles * tri


@dataclass(frozen=True)
class DitherScanPoint:
    cycles: float
    residual_power: float


def displacement_to_phase(displacement_m, wavelength_m: float = WAVELENGTH_M):
    """Round-trip optical phase of a retro-reflected beam."""
    return 4.0 * math.pi / wavelength_m * np.asarray(displacement_m, dtype=float)


def apply_dither(phase: TimeSeries, dither: DitherDrive) -> TimeSeries:
    """Add the triangle dither to a phase trajectory."""
    return TimeSeries(phase.samples + dither.phase(phase.times()), phase.sample_rate_hz, phase.seed)


def fringe_intensity(
    path: ScatterPath,
    lo_power_w: float,
    phase: TimeSeries,
    dither: Optional[DitherDrive] = None,
    phi0: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Beat power on diode 1 and diode 2.

    Args:
        path: Scattering path
        lo_power_w: Local oscillator power
        phase: Slow fringe phase from the surface motion (rad)
        dither: Optional phase dither
        phi0: Static fringe phase; drawn from the phase record's seed if omitted

    Returns:
        (dP1, dP2) in W with the location's correlation signature

    Raises:
        LinearizationError: If the scattered power exceeds 1 % of the LO
    """
    p_sc = path.effective_fraction * lo_power_w
    if p_sc > MAX_SCATTER_FRACTION * lo_power_w:
        raise LinearizationError(
            f"scattered power {p_sc:.3g} W exceeds {MAX_SCATTER_FRACTION:.0%} of the LO, beat is no longer linear"
        )
    phi0 = path.fringe_phase(phase.seed) if phi0 is None else phi0
    total = phase.samples + phi0
    if dither is not None:
        total = total + dither.phase(phase.times())
    beat = 2.0 * math.sqrt(lo_power_w * p_sc) * np.cos(total)
    s1, s2 = path.location.signature
    return s1 * beat, s2 * beat


def oversampling_factor(dither: Optional[DitherDrive], sample_rate_hz: float) -> int:
    """Rate multiplier that keeps ``DITHER_HARMONICS`` dither harmonics below Nyquist."""
    if dither is None or not dither.enabled or dither.cycles == 0:
        return 1
    return max(1, math.ceil(DITHER_HARMONICS * dither.frequency_hz / sample_rate_hz))


def synthesize_fringe(
    path: ScatterPath,
    lo_power_w: float,
    n_samples: int,
    sample_rate_hz: float,
    rng: np.random.Generator,
    dither: Optional[DitherDrive] = None,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw a surface motion and fringe phase from ``rng`` and return the beat on each diode (W).

    Dithered fringes are built at a multiple of the sample rate and
    decimated, so dither harmonics above Nyquist do not fold into the band.
    """
    factor = oversampling_factor(dither, sample_rate_hz)
    rate = sample_rate_hz * factor
    displacement = shaped_noise(path.phase_process, n_samples * factor, rate, rng)
    phase = TimeSeries(displacement_to_phase(displacement), rate, seed)
    phi0 = path.static_fringe_phase
    if phi0 is None:
        phi0 = float(rng.uniform(0.0, 2.0 * math.pi))
    dp1, dp2 = fringe_intensity(path, lo_power_w, phase, dither, phi0)
    if factor > 1:
        dp1, dp2 = (signal.resample_poly(dp, 1, factor)[:n_samples] for dp in (dp1, dp2))
    return dp1, dp2


def diode_fringe_series(
    path: ScatterPath,
    lo_power_w: float,
    n_samples: int,
    sample_rate_hz: float,
    seed: int,
    dither: Optional[DitherDrive] = None,
) -> Tuple[TimeSeries, TimeSeries]:
    """Synthesize the surface motion and return the beat on each diode (W)."""
    dp1, dp2 = synthesize_fringe(
        path, lo_power_w, n_samples, sample_rate_hz, stream_rng(seed, 0x5C, 1), dither, seed
    )
    return TimeSeries(dp1, sample_rate_hz, seed), TimeSeries(dp2, sample_rate_hz, seed)


def combine_channel(
    dp1: np.ndarray, dp2: np.ndarray, channel: Channel = Channel.DIFFERENTIAL, cmrr_db: float = math.inf
) -> np.ndarray:
    """Detector channel; the subtraction leaves 10^(-cmrr/20) of common signals."""
    channel = Channel(channel)
    if channel is Channel.DIODE1:
        return dp1
    if channel is Channel.DIODE2:
        return dp2
    leak = 0.0 if math.isinf(cmrr_db) else 10.0 ** (-cmrr_db / 20.0)
    return dp1 - (1.0 - leak) * dp2


def scatter_psd(
    path: ScatterPath,
    lo_power_w: float,
    band: Span,
    seed: int = 0,
    channel: Channel = Channel.DIFFERENTIAL,
    cmrr_db: float = math.inf,
    dither: Optional[DitherDrive] = None,
    include_shot: bool = False,
    realizations: int = 1,
) -> SpectrumTrace:
    """Monte-Carlo fringe PSD relative to the shot noise of the full LO.

    Args:
        path: Scattering path
        lo_power_w: Local oscillator power
        band: Span, lines and averages of the estimate
        seed: Base seed; realization k uses seed + k
        channel: differential, diode1 or diode2
        cmrr_db: Common-mode rejection of the subtraction
        dither: Optional phase dither
        include_shot: Add the shot floor so 0 dB means pure shot noise
        realizations: Independent records averaged in seed order

    Returns:
        Trace in shot_relative_db
    """
    if realizations < 1:
        raise DomainError("need at least one realization")
    fs = 4.0 * band.edge_hz
    n = required_samples(segment_length(fs, band.edge_hz, band.lines), band.averages)
    shot = 2.0 * photon_energy() * lo_power_w

    total = None
    for k in range(realizations):
        s1, s2 = diode_fringe_series(path, lo_power_w, n, fs, seed + k, dither)
        series = TimeSeries(combine_channel(s1.samples, s2.samples, channel, cmrr_db), fs, seed + k)
        trace = welch_psd(series, band.edge_hz, band.lines, band.averages)
        total = trace.values if total is None else total + trace.values
    relative = total / realizations / shot
    if include_shot:
        relative = relative + 1.0
    values = 10.0 * np.log10(np.maximum(relative, np.finfo(float).tiny))
    return SpectrumTrace(trace.frequencies, values, trace.rbw_hz, band.averages * realizations, Units.SHOT_RELATIVE_DB)


def fringe_trace(
    path: ScatterPath,
    lo_power_w: float,
    band: Span,
    seed: int,
    dither: Optional[DitherDrive] = None,
    cmrr_db: float = math.inf,
) -> SpectrumTrace:
    """Linear differential fringe PSD (W^2/Hz)."""
    fs = 4.0 * band.edge_hz
    n = required_samples(segment_length(fs, band.edge_hz, band.lines), band.averages)
    s1, s2 = diode_fringe_series(path, lo_power_w, n, fs, seed, dither)
    series = TimeSeries(combine_channel(s1.samples, s2.samples, Channel.DIFFERENTIAL, cmrr_db), fs, seed)
    return welch_psd(series, band.edge_hz, band.lines, band.averages)


def dither_amplitude_scan(
    path: ScatterPath,
    lo_power_w: float,
    dither_frequency_hz: float,
    amplitudes: Sequence[float],
    band: Span,
    seed: int = 0,
    cmrr_db: float = math.inf,
) -> List[DitherScanPoint]:
    """Residual fringe power below half the dither frequency per amplitude.

    Every amplitude reuses the same seed, so only the dither differs.
    """
    if not amplitudes:
        raise DomainError("dither scan needs at least one amplitude")
    cutoff = 0.5 * dither_frequency_hz
    points = []
    for cycles in amplitudes:
        dither = DitherDrive(dither_frequency_hz, float(cycles), enabled=True)
        trace = fringe_trace(path, lo_power_w, band, seed, dither, cmrr_db)
        residual = band_power(trace, 2.0 * trace.rbw_hz[0], cutoff * (1 - 1e-12))
        log.debug("dither %.3g cycles: residual %.4g W^2", cycles, residual)
        points.append(DitherScanPoint(float(cycles), residual))
    return points
