"""Noise source models: stationary PSDs, Gaussian synthesis and dust transients.

All PSDs are one-sided. Shot-relative models (RIN, squeezed signal) are
expressed as multiples of the vacuum level, so 1.0 means shot noise.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from .errors import DomainError
from .utils import stream_rng

log = logging.getLogger(__name__)

MAX_LOSS = 1.0 - 1e-9
MIN_SAMPLES = 16


class NoiseKind(str, Enum):
    WHITE = 'white'
    ONE_OVER_F = 'one_over_f'
    RIN_MODEL = 'rin_model'
    LORENTZIAN = 'lorentzian'
    COMPOSITE = 'composite'


class PulseShape(str, Enum):
    RAISED_COSINE = 'raised_cosine'
    RECTANGULAR = 'rectangular'


@dataclass(frozen=True)
class NoisePsd:
    """One-sided PSD model of a stationary source.

    Parameters by kind:
      white       level everywhere
      one_over_f  level * (reference_frequency / f) ** exponent
      rin_model   1 + (level - 1) / (1 + (f / corner_hz) ** 2); level is the
                  shot-relative plateau, the decay is first order
      lorentzian  level / (1 + (f / corner_hz) ** 2); level may be negative
                  when used inside a composite
      composite   sum of components
    """

    kind: NoiseKind
    level: float = 1.0
    reference_frequency: float = 1.0
    exponent: float = 1.0
    corner_hz: float = 1e3
    components: Tuple['NoisePsd', ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'kind', NoiseKind(self.kind))
        if self.kind is NoiseKind.COMPOSITE and not self.components:
            raise DomainError("composite PSD needs at least one component")
        if self.kind in (NoiseKind.WHITE, NoiseKind.ONE_OVER_F) and self.level < 0:
            raise DomainError(f"{self.kind.value} level must be >= 0, got {self.level}")
        if self.kind is NoiseKind.RIN_MODEL and self.level < 1.0:
            raise DomainError(f"RIN plateau is shot-relative and must be >= 1, got {self.level}")
        if self.corner_hz <= 0 or self.reference_frequency <= 0:
            raise DomainError("corner and reference frequencies must be positive")

    def __call__(self, f):
        return psd_eval(self, f)

    def scaled_excess(self, factor: float) -> 'NoisePsd':
        """RIN model for a field ``factor`` times brighter than the calibration.

        Classical intensity noise relative to shot noise grows linearly with power.
        """
        if self.kind is not NoiseKind.RIN_MODEL:
            raise DomainError("only rin_model PSDs can be rescaled to another power")
        return replace(self, level=1.0 + (self.level - 1.0) * factor)


def white(level: float) -> NoisePsd:
    return NoisePsd(NoiseKind.WHITE, level=level)


def one_over_f(level: float, reference_frequency: float = 1.0, exponent: float = 1.0) -> NoisePsd:
    return NoisePsd(NoiseKind.ONE_OVER_F, level=level, reference_frequency=reference_frequency, exponent=exponent)


def rin_model(plateau: float, corner_hz: float = 1e3) -> NoisePsd:
    return NoisePsd(NoiseKind.RIN_MODEL, level=plateau, corner_hz=corner_hz)


def lorentzian(level: float, corner_hz: float) -> NoisePsd:
    return NoisePsd(NoiseKind.LORENTZIAN, level=level, corner_hz=corner_hz)


def composite(*components: NoisePsd) -> NoisePsd:
    return NoisePsd(NoiseKind.COMPOSITE, components=tuple(components))


def vibration(level: float, corner_hz: float = 50.0, floor: Optional[float] = None) -> NoisePsd:
    """Displacement PSD: 1/f^2 below the corner, white floor above."""
    floor = level if floor is None else floor
    return composite(one_over_f(level, reference_frequency=corner_hz, exponent=2.0), white(floor))


def psd_eval(model: NoisePsd, f):
    """Evaluate a PSD model.

    Args:
        model: PSD model
        f: Frequency in Hz, scalar or array, strictly positive

    Returns:
        PSD value(s) in the model's units per Hz
    """
    f_arr = np.asarray(f, dtype=float)
    if np.any(~(f_arr > 0)):
        raise DomainError("PSD is only defined for f > 0")

    kind = model.kind
    if kind is NoiseKind.WHITE:
        value = np.full_like(f_arr, model.level)
    elif kind is NoiseKind.ONE_OVER_F:
        value = model.level * (model.reference_frequency / f_arr) ** model.exponent
    elif kind is NoiseKind.RIN_MODEL:
        value = 1.0 + (model.level - 1.0) / (1.0 + (f_arr / model.corner_hz) ** 2)
    elif kind is NoiseKind.LORENTZIAN:
        value = model.level / (1.0 + (f_arr / model.corner_hz) ** 2)
    else:
        value = sum(psd_eval(c, f_arr) for c in model.components)

    if np.ndim(f) == 0:
        return float(value)
    return value


PsdLike = Union[NoisePsd, Callable]


@dataclass(frozen=True)
class SumPsd:
    """Sum of PSD callables."""

    parts: Tuple[PsdLike, ...]

    def __call__(self, f):
        return sum(p(f) for p in self.parts)


@dataclass(frozen=True)
class ScaledPsd:
    psd: PsdLike
    factor: float

    def __call__(self, f):
        return self.factor * self.psd(f)


@dataclass(eq=False)
class TimeSeries:
    """Uniformly sampled real record."""

    samples: np.ndarray
    sample_rate_hz: float
    seed: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size < 2:
            raise DomainError("a time series needs at least 2 samples")
        if not self.sample_rate_hz > 0:
            raise DomainError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("time series contains non-finite samples")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate_hz


def shaped_noise(psd: PsdLike, n_samples: int, sample_rate_hz: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean Gaussian samples whose one-sided PSD follows ``psd``.

    Synthesis is done in the frequency domain: each positive-frequency bin
    gets independent Gaussian real and imaginary parts scaled so that the
    band-integrated PSD equals the sample variance. The DC bin is zero.
    """
    if n_samples < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / sample_rate_hz)
    target = np.zeros_like(freqs)
    target[1:] = psd(freqs[1:])
    if np.any(target < 0):
        raise DomainError("PSD model is negative somewhere in the band")

    scale = np.sqrt(target * n_samples * sample_rate_hz / 4.0)
    spectrum = scale * (rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size))
    spectrum[0] = 0.0
    if n_samples % 2 == 0:
        spectrum[-1] = math.sqrt(2.0) * scale[-1] * rng.standard_normal()
    return np.fft.irfft(spectrum, n=n_samples)


def synthesize_colored_noise(model: PsdLike, duration_s: float, sample_rate_hz: float, seed: int) -> TimeSeries:
    """Gaussian noise record matching a target PSD.

    Args:
        model: Target one-sided PSD
        duration_s: Record length in seconds
        sample_rate_hz: Sample rate
        seed: Seed; equal seeds give bit-identical records

    Returns:
        Synthesized time series
    """
    n_samples = int(round(duration_s * sample_rate_hz))
    samples = shaped_noise(model, n_samples, sample_rate_hz, stream_rng(seed))
    return TimeSeries(samples, sample_rate_hz, seed)


@dataclass(frozen=True)
class DustEventProcess:
    """Poisson train of dust crossings in one beam.

    Depth and duration are drawn log-uniform between their bounds.
    """

    rate_hz: float = 0.0
    depth_min: float = 0.001
    depth_max: float = 0.012
    duration_min_s: float = 0.01
    duration_max_s: float = 0.5
    pulse_shape: PulseShape = PulseShape.RAISED_COSINE

    def __post_init__(self):
        object.__setattr__(self, 'pulse_shape', PulseShape(self.pulse_shape))
        if self.rate_hz < 0:
            raise DomainError(f"dust rate must be >= 0, got {self.rate_hz}")
        if not 0.0 <= self.depth_min <= self.depth_max < 1.0:
            raise DomainError("dust depths must satisfy 0 <= depth_min <= depth_max < 1")
        if not 0.0 < self.duration_min_s <= self.duration_max_s:
            raise DomainError("dust durations must satisfy 0 < duration_min_s <= duration_max_s")


@dataclass(frozen=True)
class DustEvent:
    start_s: float
    depth: float
    duration_s: float


def _log_uniform(rng: np.random.Generator, low: float, high: float, size: int) -> np.ndarray:
    if low == high:
        return np.full(size, low)
    if low <= 0:
        return rng.uniform(low, high, size)
    return np.exp(rng.uniform(math.log(low), math.log(high), size))


def draw_dust_events(proc: DustEventProcess, duration_s: float, rng: np.random.Generator) -> List[DustEvent]:
    count = rng.poisson(proc.rate_hz * duration_s) if proc.rate_hz > 0 else 0
    starts = np.sort(rng.uniform(0.0, duration_s, count))
    depths = _log_uniform(rng, proc.depth_min, proc.depth_max, count)
    durations = _log_uniform(rng, proc.duration_min_s, proc.duration_max_s, count)
    return [DustEvent(float(s), float(d), float(w)) for s, d, w in zip(starts, depths, durations)]


def render_dust_events(
    events: List[DustEvent],
    duration_s: float,
    sample_rate_hz: float,
    pulse_shape: PulseShape = PulseShape.RAISED_COSINE,
    seed: int = 0,
) -> TimeSeries:
    """Loss trace eta_l(t) from explicit events; overlaps add, clamped below 1."""
    n_samples = max(int(round(duration_s * sample_rate_hz)), 2)
    shape = PulseShape(pulse_shape)
    trace = np.zeros(n_samples)
    for event in events:
        first = max(int(math.ceil(event.start_s * sample_rate_hz)), 0)
        last = min(int(math.ceil((event.start_s + event.duration_s) * sample_rate_hz)), n_samples)
        if first >= last:
            continue
        phase = (np.arange(first, last) / sample_rate_hz - event.start_s) / event.duration_s
        if shape is PulseShape.RAISED_COSINE:
            trace[first:last] += event.depth * 0.5 * (1.0 - np.cos(2.0 * np.pi * phase))
        else:
            trace[first:last] += event.depth
    np.minimum(trace, MAX_LOSS, out=trace)
    return TimeSeries(trace, sample_rate_hz, seed)


def sample_dust_events(
    proc: DustEventProcess, duration_s: float, seed: int, sample_rate_hz: float = 1e3
) -> TimeSeries:
    """Random dust loss trace for one beam.

    Args:
        proc: Event process
        duration_s: Trace length in seconds
        seed: Seed
        sample_rate_hz: Sample rate of the trace

    Returns:
        Fractional loss eta_l(t), zero between events
    """
    if not duration_s > 0:
        raise DomainError(f"duration must be positive, got {duration_s}")
    events = draw_dust_events(proc, duration_s, stream_rng(seed))
    log.debug("drew %d dust events over %.3g s", len(events), duration_s)
    return render_dust_events(events, duration_s, sample_rate_hz, proc.pulse_shape, seed)
