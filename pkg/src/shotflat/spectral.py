"""Spectrum-analyzer style PSD estimation, span stitching and budgets.

Estimates follow analyzer practice: Hann window, 50 % overlap, power
("RMS") averaging of the segment periodograms, one-sided density scaling.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, Sequence, Tuple, Union

import numpy as np
from scipy import signal

from .errors import BinMismatchError, DomainError, InsufficientDataError, StitchGapError, UnmappedSourceError
from .fields import PORTS, DifferentialCoefficients
from .noise import PsdLike, TimeSeries

log = logging.getLogger(__name__)

CSV_HEADER = ['frequency_hz', 'value', 'units', 'rbw_hz', 'averages']
ELECTRONIC = 'electronic'
BUDGET_PORTS = PORTS + (ELECTRONIC,)


class Units(str, Enum):
    V2_PER_HZ = 'V2_per_Hz'
    SHOT_RELATIVE_DB = 'shot_relative_db'


@dataclass(eq=False)
class SpectrumTrace:
    """Frequency-binned PSD estimate.

    ``rbw_hz`` and ``averages`` are per bin so a stitched trace keeps the
    resolution of the span each bin came from.
    """

    frequencies: np.ndarray
    values: np.ndarray
    rbw_hz: np.ndarray
    averages: np.ndarray
    units: Units = Units.V2_PER_HZ
    seams: Tuple[float, ...] = ()

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        n = self.frequencies.size
        self.rbw_hz = np.broadcast_to(np.asarray(self.rbw_hz, dtype=float), (n,)).copy()
        self.averages = np.broadcast_to(np.asarray(self.averages, dtype=int), (n,)).copy()
        self.units = Units(self.units)
        self.seams = tuple(float(s) for s in self.seams)
        if self.values.shape != self.frequencies.shape:
            raise DomainError("trace values and frequencies differ in length")
        if n > 1 and np.any(np.diff(self.frequencies) <= 0):
            raise DomainError("trace frequencies must be strictly increasing")
        if np.any(self.rbw_hz <= 0):
            raise DomainError("resolution bandwidth must be positive")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("trace values must be finite")

    def __len__(self) -> int:
        return self.frequencies.size

    def band(self, low_hz: float, high_hz: float) -> np.ndarray:
        """Boolean mask of bins with low_hz <= f <= high_hz."""
        return (self.frequencies >= low_hz) & (self.frequencies <= high_hz)


@dataclass(frozen=True)
class Span:
    edge_hz: float
    lines: int
    averages: int

    @property
    def rbw_hz(self) -> float:
        return self.edge_hz / self.lines


@dataclass(frozen=True)
class SpanPlan:
    spans: Tuple[Span, ...] = field(default_factory=tuple)

    def __post_init__(self):
        spans = tuple(self.spans)
        object.__setattr__(self, 'spans', spans)
        if not spans:
            raise DomainError("a span plan needs at least one span")
        for span in spans:
            if span.lines < 2:
                raise DomainError(f"span {span.edge_hz:g} Hz needs at least 2 FFT lines")
            if span.averages < 1:
                raise DomainError(f"span {span.edge_hz:g} Hz needs at least 1 average")
        edges = [s.edge_hz for s in spans]
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise DomainError("span edges must be strictly increasing")

    def __iter__(self):
        return iter(self.spans)

    def __len__(self) -> int:
        return len(self.spans)


def segment_length(sample_rate_hz: float, span_hz: float, lines: int) -> int:
    """Samples per FFT segment for a span/lines request at a given rate."""
    exact = sample_rate_hz * lines / span_hz
    nperseg = int(round(exact))
    if nperseg < 2 or abs(exact - nperseg) > 1e-6 * exact:
        raise DomainError(
            f"sample rate {sample_rate_hz:g} Hz is not a whole number of {span_hz / lines:g} Hz bins"
        )
    return nperseg


def required_samples(nperseg: int, averages: int) -> int:
    """Samples needed for ``averages`` segments at 50 % overlap."""
    return nperseg + (averages - 1) * (nperseg // 2)


def welch_psd(series: TimeSeries, span: float, lines: int, averages: int) -> SpectrumTrace:
    """Averaged periodogram over 0..span with span/lines resolution.

    Args:
        series: Input record; its rate must be at least 2 * span
        span: Upper edge of the analysis span in Hz
        lines: Number of FFT lines (RBW = span / lines)
        averages: Number of power-averaged segments

    Returns:
        One-sided PSD in units^2/Hz from DC to the span edge

    Raises:
        InsufficientDataError: If the record is shorter than the averages need
    """
    fs = series.sample_rate_hz
    if fs < 2.0 * span * (1 - 1e-12):
        raise DomainError(f"sample rate {fs:g} Hz cannot resolve a {span:g} Hz span")
    nperseg = segment_length(fs, span, lines)
    needed = required_samples(nperseg, averages)
    if len(series) < needed:
        raise InsufficientDataError(
            f"{averages} averages at {span / lines:g} Hz resolution need {needed / fs:.6g} s of data, "
            f"got {series.duration_s:.6g} s"
        )

    step = nperseg // 2
    freqs, pxx = signal.welch(
        series.samples[:needed],
        fs=fs,
        window='hann',
        nperseg=nperseg,
        noverlap=nperseg - step,
        detrend=False,
        scaling='density',
        average='mean',
    )
    keep = freqs <= span * (1 + 1e-12)
    log.debug("welch: span %.6g Hz, nperseg %d, %d averages", span, nperseg, averages)
    return SpectrumTrace(freqs[keep], pxx[keep], span / lines, averages)


def stitch_spans(traces: Sequence[SpectrumTrace]) -> SpectrumTrace:
    """Piece spans together, finest resolution first.

    Each span loses its DC and first bin (f < 2 * RBW). A bin is taken from
    the first trace, in span order, that covers its frequency.

    Raises:
        StitchGapError: If consecutive spans leave frequencies uncovered
    """
    if not traces:
        raise DomainError("nothing to stitch")
    tops = [t.frequencies[-1] for t in traces]
    if any(b < a for a, b in zip(tops, tops[1:])):
        raise DomainError("traces must be sorted by span")

    pieces = []
    seams = []
    covered = -math.inf
    units = traces[0].units
    for trace in traces:
        if trace.units is not units:
            raise BinMismatchError("cannot stitch traces with different units")
        keep = trace.frequencies >= 2.0 * trace.rbw_hz * (1 - 1e-12)
        keep &= trace.frequencies > covered
        if not np.any(keep):
            continue
        first = trace.frequencies[keep][0]
        if covered > -math.inf:
            if first > covered + trace.rbw_hz[keep][0] * (1 + 1e-9):
                raise StitchGapError(covered, first)
            seams.append(covered)
        pieces.append((trace, keep))
        covered = trace.frequencies[keep][-1]

    seams = list(traces[0].seams) + seams if len(traces) == 1 else seams
    return SpectrumTrace(
        np.concatenate([t.frequencies[k] for t, k in pieces]),
        np.concatenate([t.values[k] for t, k in pieces]),
        np.concatenate([t.rbw_hz[k] for t, k in pieces]),
        np.concatenate([t.averages[k] for t, k in pieces]),
        units,
        tuple(seams),
    )


def _check_bins(a: SpectrumTrace, b: SpectrumTrace):
    if a.frequencies.shape != b.frequencies.shape or not np.allclose(
        a.frequencies, b.frequencies, rtol=1e-12, atol=0.0
    ):
        raise BinMismatchError("traces do not share frequency bins")


def normalize_to_shot(measured: SpectrumTrace, shot: SpectrumTrace, smooth_shot: bool = False) -> SpectrumTrace:
    """Express a PSD in dB relative to a shot-noise trace.

    Args:
        measured: Linear PSD
        shot: Linear shot-noise PSD on the same bins
        smooth_shot: Divide by the broadband mean of the shot trace instead

    Returns:
        Trace in shot_relative_db
    """
    _check_bins(measured, shot)
    reference = np.full_like(shot.values, shot.values.mean()) if smooth_shot else shot.values
    tiny = np.finfo(float).tiny
    ratio = np.maximum(measured.values, tiny) / np.maximum(reference, tiny)
    return SpectrumTrace(
        measured.frequencies,
        10.0 * np.log10(ratio),
        measured.rbw_hz,
        measured.averages,
        Units.SHOT_RELATIVE_DB,
        measured.seams,
    )


def denormalize_from_shot(relative: SpectrumTrace, shot: SpectrumTrace) -> SpectrumTrace:
    """Inverse of ``normalize_to_shot``."""
    _check_bins(relative, shot)
    return SpectrumTrace(
        relative.frequencies,
        shot.values * 10.0 ** (relative.values / 10.0),
        relative.rbw_hz,
        relative.averages,
        Units.V2_PER_HZ,
        relative.seams,
    )


def dark_correct(measured_db, dark_db):
    """Remove dark noise from a shot-relative measurement.

    V_corr = (V_meas - V_dark) / (1 - V_dark), all shot-relative and linear.

    Args:
        measured_db: Measured level(s) in dB relative to shot noise
        dark_db: Dark level(s) in dB relative to shot noise

    Returns:
        Corrected level(s) in dB
    """
    v_meas = 10.0 ** (np.asarray(measured_db, dtype=float) / 10.0)
    v_dark = 10.0 ** (np.asarray(dark_db, dtype=float) / 10.0)
    if np.any(v_dark >= v_meas):
        raise DomainError("dark noise must lie below the measured level")
    if np.any(v_dark >= 1.0):
        raise DomainError("dark noise must lie below shot noise")
    corrected = 10.0 * np.log10((v_meas - v_dark) / (1.0 - v_dark))
    if np.ndim(corrected) == 0:
        return float(corrected)
    return corrected


def budget_terms(
    diff: DifferentialCoefficients,
    sources: Iterable[Tuple[str, PsdLike]],
    frequencies: np.ndarray,
    quantum_scale: float = 1.0,
) -> Dict[str, np.ndarray]:
    """Per-port contributions to the output PSD.

    Quadrature ports carry shot-relative PSDs and default to vacuum (1.0)
    when no source is mapped to them; mapped PSDs on the same port add.
    ``electronic`` sources are already in output units.
    """
    frequencies = np.asarray(frequencies, dtype=float)
    quadrature: Dict[str, np.ndarray] = {}
    electronic = np.zeros_like(frequencies)
    for port, psd in sources:
        if port not in BUDGET_PORTS:
            raise UnmappedSourceError(f"noise source mapped to unknown port {port!r}, expected one of {BUDGET_PORTS}")
        value = np.asarray(psd(frequencies), dtype=float)
        if port == ELECTRONIC:
            electronic = electronic + value
        else:
            quadrature[port] = quadrature.get(port, 0.0) + value

    terms = {}
    for port in PORTS:
        level = quadrature.get(port, np.ones_like(frequencies))
        terms[port] = quantum_scale * diff.port(port) ** 2 * level
    terms[ELECTRONIC] = electronic
    return terms


def analytic_budget(
    diff: DifferentialCoefficients,
    sources: Iterable[Tuple[str, PsdLike]],
    frequencies: np.ndarray,
    quantum_scale: float = 1.0,
    rbw_hz: Union[float, np.ndarray] = 1.0,
) -> SpectrumTrace:
    """Sum of coefficient^2 x source PSD over every port, plus additive terms.

    Args:
        diff: Differential coefficients
        sources: (port, PSD) pairs; ports are lo, signal, v0, v1, v2, electronic
        frequencies: Evaluation frequencies in Hz
        quantum_scale: Converts coefficient^2 x shot-relative PSD to output units
        rbw_hz: Resolution metadata for the returned trace

    Returns:
        Output PSD trace
    """
    terms = budget_terms(diff, sources, frequencies, quantum_scale)
    total = sum(terms.values())
    return SpectrumTrace(frequencies, total, rbw_hz, 0)


def band_mean_db(trace: SpectrumTrace, low_hz: float, high_hz: float) -> float:
    """Mean of a shot-relative dB trace over a band."""
    if trace.units is not Units.SHOT_RELATIVE_DB:
        raise DomainError("band_mean_db needs a shot_relative_db trace")
    mask = trace.band(low_hz, high_hz)
    if not np.any(mask):
        raise DomainError(f"no bins between {low_hz:g} and {high_hz:g} Hz")
    return float(trace.values[mask].mean())


def band_power(trace: SpectrumTrace, low_hz: float = 0.0, high_hz: float = math.inf) -> float:
    """Integral of a linear PSD trace over a band."""
    if trace.units is not Units.V2_PER_HZ:
        raise DomainError("band_power needs a linear trace")
    mask = trace.band(low_hz, high_hz)
    return float(np.sum(trace.values[mask] * trace.rbw_hz[mask]))


def write_trace_csv(trace: SpectrumTrace, path: Path) -> Path:
    """Write a trace as CSV (UTF-8, LF line endings)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for f, v, rbw, avg in zip(trace.frequencies, trace.values, trace.rbw_hz, trace.averages):
            writer.writerow([repr(float(f)), repr(float(v)), trace.units.value, repr(float(rbw)), int(avg)])
    return path


def read_trace_csv(path: Path) -> SpectrumTrace:
    """Load a trace written by ``write_trace_csv``."""
    with Path(path).open('r', encoding='utf-8', newline='') as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise DomainError(f"{path}: unexpected CSV header {header}")
        rows = list(reader)
    if not rows:
        raise DomainError(f"{path}: no bins")
    units = {row[2] for row in rows}
    if len(units) != 1:
        raise DomainError(f"{path}: mixed units {sorted(units)}")
    return SpectrumTrace(
        np.array([float(r[0]) for r in rows]),
        np.array([float(r[1]) for r in rows]),
        np.array([float(r[3]) for r in rows]),
        np.array([int(r[4]) for r in rows]),
        Units(units.pop()),
    )
