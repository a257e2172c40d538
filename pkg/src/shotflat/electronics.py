"""Detector electronics: topologies, flicker noise, dark noise and clearance."""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import constants

from .errors import DomainError, LengthMismatchError
from .fields import WAVELENGTH_M, Topology, photon_energy
from .noise import NoisePsd, TimeSeries, composite, one_over_f, shaped_noise, white
from .utils import stream_rng

log = logging.getLogger(__name__)

DEFAULT_RESPONSIVITY = 0.78
DEFAULT_DARK_CLEARANCE_DB = 20.0
DEFAULT_DARK_REFERENCE_W = 1e-3
DEFAULT_DARK_CORNER_HZ = 30.0
CLEARANCE_REFERENCE_HZ = 1e3


class ResistorType(str, Enum):
    CARBON = 'carbon'
    METAL_FILM = 'metal_film'


# Flicker index K: stage noise K * I_dc^2 * (1 Hz / f) in A^2/Hz.
# Carbon crosses shot noise near 100 Hz at 1.3 mW with two matched stages.
FLICKER_INDEX = {
    ResistorType.CARBON: 5.8e-14,
    ResistorType.METAL_FILM: 5.8e-18,
}


def max_responsivity(wavelength_m: float = WAVELENGTH_M) -> float:
    """Responsivity of a unit quantum efficiency diode in A/W."""
    return constants.e / photon_energy(wavelength_m)


def flux_to_current(flux):
    """Photon flux (1/s) to photocurrent (A) at unit efficiency."""
    return constants.e * flux


def dark_preset(
    g1: float,
    g2: float,
    responsivity: float = DEFAULT_RESPONSIVITY,
    clearance_db: float = DEFAULT_DARK_CLEARANCE_DB,
    reference_power_w: float = DEFAULT_DARK_REFERENCE_W,
    corner_hz: float = DEFAULT_DARK_CORNER_HZ,
) -> NoisePsd:
    """Dark noise D * (1 + corner / f), D set ``clearance_db`` below shot at the reference power."""
    shot = _shot_psd(g1, g2, responsivity, reference_power_w)
    level = shot / 10.0 ** (clearance_db / 10.0)
    if corner_hz <= 0:
        return white(level)
    return composite(white(level), one_over_f(level * corner_hz))


def _shot_psd(g1: float, g2: float, responsivity: float, lo_power_w: float) -> float:
    mean_gain_sq = 0.5 * (g1 ** 2 + g2 ** 2)
    return mean_gain_sq * 2.0 * constants.e * responsivity * lo_power_w


@dataclass(frozen=True)
class DarkSettings:
    """Parameters of ``dark_preset`` that do not depend on the gains."""

    clearance_db: float = DEFAULT_DARK_CLEARANCE_DB
    reference_power_w: float = DEFAULT_DARK_REFERENCE_W
    corner_hz: float = DEFAULT_DARK_CORNER_HZ

    def psd(self, g1: float, g2: float, responsivity: float) -> NoisePsd:
        return dark_preset(g1, g2, responsivity, self.clearance_db, self.reference_power_w, self.corner_hz)


@dataclass(frozen=True)
class DetectorDesign:
    """Gain topology, resistor technology and dark noise of the detector.

    For current_subtracting both gains hold the single gain g. ``dark`` is
    an output PSD in V^2/Hz. When it is omitted it is built from
    ``dark_settings`` (default preset if None) and rebuilt whenever the
    gains change; an explicit ``dark`` stays fixed.
    """

    topology: Topology = Topology.VARIABLE_GAIN
    g1: float = 1e4
    g2: float = 1e4
    resistor_type: ResistorType = ResistorType.METAL_FILM
    dark: Optional[NoisePsd] = None
    responsivity: float = DEFAULT_RESPONSIVITY
    flicker_index: Optional[float] = None
    dark_settings: Optional[DarkSettings] = None

    def __post_init__(self):
        object.__setattr__(self, 'topology', Topology(self.topology))
        object.__setattr__(self, 'resistor_type', ResistorType(self.resistor_type))
        if self.g1 <= 0 or self.g2 <= 0:
            raise DomainError(f"gains must be positive, got g1={self.g1}, g2={self.g2}")
        if self.topology is Topology.CURRENT_SUBTRACTING and self.g1 != self.g2:
            raise DomainError("current_subtracting has a single gain g (g1 must equal g2)")
        if not 0.0 < self.responsivity <= max_responsivity() * (1 + 1e-12):
            raise DomainError(
                f"responsivity = {self.responsivity} A/W outside (0, {max_responsivity():.4f}]"
            )
        if self.flicker_index is not None and self.flicker_index < 0:
            raise DomainError("flicker index must be >= 0")
        if self.dark is None:
            settings = self.dark_settings if self.dark_settings is not None else DarkSettings()
            object.__setattr__(self, 'dark_settings', settings)
            object.__setattr__(self, 'dark', settings.psd(self.g1, self.g2, self.responsivity))
        elif self.dark_settings is not None:
            raise DomainError("give either an explicit dark PSD or dark settings, not both")

    @classmethod
    def current_subtracting(cls, g: float, **kwargs) -> 'DetectorDesign':
        return cls(topology=Topology.CURRENT_SUBTRACTING, g1=g, g2=g, **kwargs)

    @property
    def gain(self) -> float:
        if self.topology is not Topology.CURRENT_SUBTRACTING:
            raise DomainError("variable_gain designs have two gains, use g1 and g2")
        return self.g1

    @property
    def flicker_k(self) -> float:
        if self.flicker_index is not None:
            return self.flicker_index
        return FLICKER_INDEX[self.resistor_type]

    def with_gains(self, g1: float, g2: float) -> 'DetectorDesign':
        """Same design at new gains; a preset dark level follows them."""
        if self.dark_settings is not None:
            return replace(self, g1=g1, g2=g2, dark=None)
        return replace(self, g1=g1, g2=g2)


@dataclass(eq=False)
class DetectorOutput:
    differential: TimeSeries
    dc_volts: Tuple[float, float]

    @property
    def dc_difference(self) -> float:
        return self.dc_volts[0] - self.dc_volts[1]


def flicker_psd(design: DetectorDesign, i1_dc: float, i2_dc: float) -> NoisePsd:
    """Output flicker PSD (V^2/Hz) for the given DC photocurrents (A).

    Variable gain: one source per stage, each scaled by its own DC current.
    Current subtracting: one source scaled by the residual DC current.
    """
    k = design.flicker_k
    if design.topology is Topology.CURRENT_SUBTRACTING:
        level = design.g1 ** 2 * k * (i1_dc - i2_dc) ** 2
    else:
        level = k * ((design.g1 * i1_dc) ** 2 + (design.g2 * i2_dc) ** 2)
    return one_over_f(level)


def detector_output(
    design: DetectorDesign,
    i1: TimeSeries,
    i2: TimeSeries,
    rng: Optional[np.random.Generator] = None,
) -> DetectorOutput:
    """Turn two photocurrent records (A) into the detector output voltage.

    Args:
        design: Detector design
        i1: Diode 1 photocurrent
        i2: Diode 2 photocurrent
        rng: Generator for flicker and dark noise; seeded from ``i1.seed`` if omitted

    Returns:
        Differential voltage and the per-diode DC voltages

    Raises:
        LengthMismatchError: If the records differ in length or rate
    """
    if len(i1) != len(i2) or i1.sample_rate_hz != i2.sample_rate_hz:
        raise LengthMismatchError(
            f"photocurrent records differ: {len(i1)} samples at {i1.sample_rate_hz:g} Hz "
            f"vs {len(i2)} at {i2.sample_rate_hz:g} Hz"
        )
    rng = rng if rng is not None else stream_rng(i1.seed, 0xE1)
    n, fs = len(i1), i1.sample_rate_hz
    dc1, dc2 = float(i1.samples.mean()), float(i2.samples.mean())
    k = design.flicker_k

    if design.topology is Topology.CURRENT_SUBTRACTING:
        stage = shaped_noise(one_over_f(k * (dc1 - dc2) ** 2), n, fs, rng)
        volts = design.g1 * (i1.samples - i2.samples + stage)
    else:
        stage1 = shaped_noise(one_over_f(k * dc1 ** 2), n, fs, rng)
        stage2 = shaped_noise(one_over_f(k * dc2 ** 2), n, fs, rng)
        volts = design.g1 * (i1.samples + stage1) - design.g2 * (i2.samples + stage2)

    volts = volts + shaped_noise(design.dark, n, fs, rng)
    log.debug("detector output: %s, DC %.4g A / %.4g A", design.topology.value, dc1, dc2)
    return DetectorOutput(TimeSeries(volts, fs, i1.seed), (design.g1 * dc1, design.g2 * dc2))


def shot_psd(design: DetectorDesign, lo_power_w: float) -> float:
    """Output shot-noise PSD (V^2/Hz) for an LO split evenly over both diodes."""
    if not lo_power_w > 0:
        raise DomainError(f"LO power must be positive, got {lo_power_w}")
    return _shot_psd(design.g1, design.g2, design.responsivity, lo_power_w)


def dark_clearance_db(design: DetectorDesign, lo_power_w: float, reference_hz: float = CLEARANCE_REFERENCE_HZ) -> float:
    """Shot-noise clearance over dark noise at a reference frequency."""
    return float(10.0 * np.log10(shot_psd(design, lo_power_w) / design.dark(reference_hz)))
