"""Beam pointing coupling through non-uniform photodiode efficiency.

A Gaussian spot on a pixelated efficiency map gives an effective quantum
efficiency; its gradient with respect to the beam position turns jitter
into photocurrent noise. The modecleaner model converts jitter entering
the cavity into common intensity noise on the transmitted beam.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage, special

from .errors import ClippingError, DomainError
from .noise import PsdLike, SumPsd
from .utils import stream_rng

log = logging.getLogger(__name__)

MIN_OVERLAP = 0.99
GRADIENT_STEP = 0.01  # fraction of the waist


@dataclass(eq=False)
class PhotodiodeMap:
    """Piecewise-constant efficiency on a square grid.

    ``efficiency[row, col]`` covers the cell centered at
    x = origin_x + (col - (cols - 1) / 2) * pitch, y likewise with rows.
    """

    efficiency: np.ndarray
    pitch_m: float
    nominal: Optional[float] = None
    origin_m: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.efficiency = np.asarray(self.efficiency, dtype=float)
        if self.efficiency.ndim != 2 or min(self.efficiency.shape) < 1:
            raise DomainError("efficiency map must be a non-empty 2-D grid")
        if not self.pitch_m > 0:
            raise DomainError(f"map pitch must be positive, got {self.pitch_m}")
        if np.any(self.efficiency < 0) or np.any(self.efficiency > 1) or not np.all(np.isfinite(self.efficiency)):
            raise DomainError("map efficiencies must lie in [0, 1]")
        if self.nominal is None:
            self.nominal = float(self.efficiency.mean())
        self.origin_m = (float(self.origin_m[0]), float(self.origin_m[1]))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.efficiency.shape

    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """Cell edges along x (columns) and y (rows)."""
        rows, cols = self.shape
        x = (np.arange(cols + 1) - cols / 2.0) * self.pitch_m + self.origin_m[0]
        y = (np.arange(rows + 1) - rows / 2.0) * self.pitch_m + self.origin_m[1]
        return x, y

    @classmethod
    def uniform(cls, value: float, rows: int, cols: int, pitch_m: float) -> 'PhotodiodeMap':
        return cls(np.full((rows, cols), float(value)), pitch_m, nominal=float(value))


@dataclass(frozen=True)
class BeamProfile:
    """Gaussian spot, intensity proportional to exp(-2 r^2 / w^2)."""

    waist_m: float
    x0: float = 0.0
    y0: float = 0.0
    power_w: float = 1.0

    def __post_init__(self):
        if not self.waist_m > 0:
            raise DomainError(f"beam waist must be positive, got {self.waist_m}")

    def moved(self, dx: float = 0.0, dy: float = 0.0) -> 'BeamProfile':
        return BeamProfile(self.waist_m, self.x0 + dx, self.y0 + dy, self.power_w)

    def resized(self, waist_m: float) -> 'BeamProfile':
        return BeamProfile(waist_m, self.x0, self.y0, self.power_w)


@dataclass(frozen=True)
class JitterProcess:
    """Beam displacement noise per transverse axis.

    ``mode_shape_psd`` is an optional PSD of the fractional waist change.
    """

    x_psd: PsdLike
    y_psd: Optional[PsdLike] = None
    mode_shape_psd: Optional[PsdLike] = None

    @property
    def axes(self) -> Tuple[PsdLike, PsdLike]:
        return self.x_psd, self.x_psd if self.y_psd is None else self.y_psd


@dataclass(frozen=True)
class Modecleaner:
    linewidth_hz: float = 4.7e6
    hom_suppression: float = 1.0
    waist_m: float = 500e-6
    enabled: bool = True

    def __post_init__(self):
        if not self.linewidth_hz > 0:
            raise DomainError(f"modecleaner linewidth must be positive, got {self.linewidth_hz}")
        if not self.hom_suppression >= 1.0:
            raise DomainError(f"hom_suppression must be >= 1, got {self.hom_suppression}")
        if not self.waist_m > 0:
            raise DomainError(f"modecleaner waist must be positive, got {self.waist_m}")

    def lowpass(self, f):
        """Power transfer of the cavity pole at half the linewidth."""
        return 1.0 / (1.0 + (np.asarray(f, dtype=float) / (0.5 * self.linewidth_hz)) ** 2)


class CavityPart(str, Enum):
    RESIDUAL = 'residual'
    CONVERTED = 'converted'
    REFLECTED = 'reflected'


@dataclass(frozen=True)
class CavityFilteredPsd:
    """One share of a jitter PSD after the modecleaner.

    residual  S * L / h        jitter still on the transmitted beam
    converted S * L * (1 - 1/h) jitter turned into intensity noise
    reflected S * (1 - L)      removed by the cavity pole
    The three shares add up to S.
    """

    source: PsdLike
    cavity: Modecleaner
    part: CavityPart
    scale: float = 1.0

    def __call__(self, f):
        s = np.asarray(self.source(f), dtype=float)
        pole = self.cavity.lowpass(f)
        inverse = 1.0 / self.cavity.hom_suppression
        if self.part is CavityPart.RESIDUAL:
            value = s * pole * inverse
        elif self.part is CavityPart.CONVERTED:
            value = s * pole * (1.0 - inverse)
        else:
            value = s * (1.0 - pole)
        value = self.scale * value
        return float(value) if np.ndim(f) == 0 else value


@dataclass(frozen=True)
class ModecleanerOutput:
    """Jitter and common relative-intensity PSDs behind the cavity."""

    residual: JitterProcess
    converted_intensity: PsdLike
    converted_jitter: Tuple[PsdLike, PsdLike]
    reflected: Tuple[PsdLike, PsdLike]


def _cell_weights(edges: np.ndarray, center: float, waist: float) -> np.ndarray:
    """Fraction of a 1-D Gaussian profile falling in each cell."""
    cdf = 0.5 * special.erf(math.sqrt(2.0) * (edges - center) / waist)
    return np.diff(cdf)


def overlap(pd_map: PhotodiodeMap, beam: BeamProfile) -> float:
    """Fraction of beam power landing on the mapped area."""
    xe, ye = pd_map.edges()
    return float(_cell_weights(xe, beam.x0, beam.waist_m).sum() * _cell_weights(ye, beam.y0, beam.waist_m).sum())


def response(pd_map: PhotodiodeMap, beam: BeamProfile) -> float:
    """Effective efficiency seen by the beam.

    Integrates eta(x, y) against the normalized Gaussian intensity. Cell
    integrals are exact products of error functions.

    Args:
        pd_map: Efficiency map
        beam: Spot position and size

    Returns:
        Dimensionless effective efficiency

    Raises:
        ClippingError: If less than 99 % of the beam hits the map
    """
    xe, ye = pd_map.edges()
    px = _cell_weights(xe, beam.x0, beam.waist_m)
    py = _cell_weights(ye, beam.y0, beam.waist_m)
    captured = px.sum() * py.sum()
    if captured < MIN_OVERLAP:
        raise ClippingError(
            f"beam at ({beam.x0:.3g}, {beam.y0:.3g}) m with waist {beam.waist_m:.3g} m "
            f"overlaps the active area by {captured:.2%}, need {MIN_OVERLAP:.0%}"
        )
    return float(py @ pd_map.efficiency @ px)


def pointing_coefficient(pd_map: PhotodiodeMap, beam: BeamProfile) -> Tuple[float, float]:
    """Gradient of the response with respect to the beam position (1/m)."""
    h = GRADIENT_STEP * beam.waist_m
    dx = (response(pd_map, beam.moved(dx=h)) - response(pd_map, beam.moved(dx=-h))) / (2.0 * h)
    dy = (response(pd_map, beam.moved(dy=h)) - response(pd_map, beam.moved(dy=-h))) / (2.0 * h)
    return dx, dy


def waist_coefficient(pd_map: PhotodiodeMap, beam: BeamProfile) -> float:
    """Response change per fractional waist change."""
    h = GRADIENT_STEP * beam.waist_m
    up = response(pd_map, beam.resized(beam.waist_m + h))
    down = response(pd_map, beam.resized(beam.waist_m - h))
    return (up - down) / (2.0 * GRADIENT_STEP)


def synthetic_map(
    rows: int,
    cols: int,
    pitch_m: float,
    nominal: float = 0.99,
    rms: float = 0.005,
    correlation_m: float = 100e-6,
    seed: int = 0,
) -> PhotodiodeMap:
    """Rough efficiency map made from smoothed white noise.

    Args:
        rows: Grid rows
        cols: Grid columns
        pitch_m: Cell size
        nominal: Mean efficiency
        rms: Efficiency ripple, absolute
        correlation_m: Smoothing length of the ripple
        seed: Seed

    Returns:
        Map clipped to [0, 1]
    """
    raw = stream_rng(seed).standard_normal((rows, cols))
    smooth = ndimage.gaussian_filter(raw, sigma=correlation_m / pitch_m, mode='wrap')
    std = smooth.std()
    ripple = smooth / std if std > 0 else smooth
    grid = np.clip(nominal + rms * ripple, 0.0, 1.0)
    return PhotodiodeMap(grid, pitch_m, nominal=nominal)


def save_map(pd_map: PhotodiodeMap, path: Path) -> Path:
    """Write a map as text: ``rows cols pitch_m`` then one grid row per line."""
    path = Path(path)
    rows, cols = pd_map.shape
    lines = [f"{rows} {cols} {pd_map.pitch_m!r}"]
    lines.extend(' '.join(repr(float(v)) for v in row) for row in pd_map.efficiency)
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return path


def load_map(path: Path) -> PhotodiodeMap:
    """Read a map written by ``save_map``; ``#`` starts a comment."""
    tokens = []
    for raw in Path(path).read_text(encoding='utf-8').splitlines():
        tokens.extend(raw.split('#', 1)[0].split())
    if len(tokens) < 3:
        raise DomainError(f"{path}: missing 'rows cols pitch_m' header")
    try:
        rows, cols, pitch = int(tokens[0]), int(tokens[1]), float(tokens[2])
        values = np.array([float(t) for t in tokens[3:]])
    except ValueError as e:
        raise DomainError(f"{path}: {e}") from e
    if values.size != rows * cols:
        raise DomainError(f"{path}: header says {rows}x{cols} cells, found {values.size} values")
    return PhotodiodeMap(values.reshape(rows, cols), pitch)


def modecleaner_filter(jitter: JitterProcess, cavity: Modecleaner) -> ModecleanerOutput:
    """Split input jitter into what the cavity transmits, converts and drops.

    Higher-order mode content is suppressed in power by ``hom_suppression``;
    the suppressed share reappears as relative intensity noise common to
    both homodyne arms, scaled by 1/waist^2.

    Args:
        jitter: Displacement noise entering the cavity
        cavity: Linewidth, suppression factor and waist

    Returns:
        Residual jitter, converted intensity PSD (1/Hz) and the bookkeeping shares
    """
    axes = jitter.axes
    residual = tuple(CavityFilteredPsd(s, cavity, CavityPart.RESIDUAL) for s in axes)
    converted = tuple(CavityFilteredPsd(s, cavity, CavityPart.CONVERTED) for s in axes)
    reflected = tuple(CavityFilteredPsd(s, cavity, CavityPart.REFLECTED) for s in axes)
    intensity = SumPsd(
        tuple(CavityFilteredPsd(s, cavity, CavityPart.CONVERTED, scale=cavity.waist_m ** -2) for s in axes)
    )
    mode_shape = jitter.mode_shape_psd
    if mode_shape is not None:
        mode_shape = CavityFilteredPsd(mode_shape, cavity, CavityPart.RESIDUAL)
    log.debug("modecleaner: linewidth %.3g Hz, suppression %.3g", cavity.linewidth_hz, cavity.hom_suppression)
    return ModecleanerOutput(
        residual=JitterProcess(residual[0], residual[1], mode_shape),
        converted_intensity=intensity,
        converted_jitter=converted,
        reflected=reflected,
    )


def diode_coefficients(
    maps: Sequence[PhotodiodeMap], beam: BeamProfile
) -> Tuple[Tuple[float, float, float], ...]:
    """Fractional photocurrent change per metre of x, per metre of y and per unit waist change.

    One tuple per map, each divided by the map's response so it applies
    directly to the photocurrent.
    """
    out = []
    for pd_map in maps:
        base = response(pd_map, beam)
        if base <= 0:
            raise DomainError("beam sits on a dead region, response is zero")
        gx, gy = pointing_coefficient(pd_map, beam)
        gw = waist_coefficient(pd_map, beam)
        out.append((gx / base, gy / base, gw / base))
    return tuple(out)
