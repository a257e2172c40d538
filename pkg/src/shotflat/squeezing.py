"""Squeezed vacuum from a below-threshold OPO and its detection efficiency.

The variances use the standard below-threshold OPO result

    V(-/+) = 1 -/+ eta * 4x / ((1 +/- x)^2 + (f / (linewidth / 2))^2),  x = sqrt(P/P_th)

which is an external model assumption: measured levels are only expected to
agree with it to within a couple of dB.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import DomainError
from .noise import NoisePsd, composite, lorentzian, white

log = logging.getLogger(__name__)

DEFAULT_LINEWIDTH_HZ = 10e6
PREDICTION_FREQUENCY_HZ = 1e3


@dataclass(frozen=True)
class OpoParams:
    pump_ratio: float
    cavity_linewidth_hz: float = DEFAULT_LINEWIDTH_HZ
    phase_noise_rms_rad: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.pump_ratio < 1.0:
            raise DomainError(f"pump_ratio = {self.pump_ratio} must lie in [0, 1) (below threshold)")
        if not self.cavity_linewidth_hz > 0:
            raise DomainError(f"OPO linewidth must be positive, got {self.cavity_linewidth_hz}")
        if self.phase_noise_rms_rad < 0:
            raise DomainError(f"phase noise must be >= 0, got {self.phase_noise_rms_rad}")

    @property
    def x(self) -> float:
        return math.sqrt(self.pump_ratio)


@dataclass(frozen=True)
class EfficiencyChain:
    """Loss budget between the OPO and the photocurrent; visibility enters squared."""

    escape: float = 1.0
    propagation: float = 1.0
    visibility: float = 1.0
    quantum_efficiency: float = 1.0

    def __post_init__(self):
        for name in ('escape', 'propagation', 'visibility', 'quantum_efficiency'):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise DomainError(f"{name} = {value} outside (0, 1]")


@dataclass(frozen=True)
class SqueezingPrediction:
    eta_total: float
    squeezing_db: float
    anti_squeezing_db: float

    def as_dict(self) -> dict:
        return {
            'eta_total': self.eta_total,
            'squeezing_db': self.squeezing_db,
            'anti_squeezing_db': self.anti_squeezing_db,
        }


def total_efficiency(chain: EfficiencyChain) -> float:
    return chain.escape * chain.propagation * chain.visibility ** 2 * chain.quantum_efficiency


def phase_mixing(phase_noise_rms_rad: float) -> float:
    """Mean sin^2 of a zero-mean Gaussian phase error with the given rms."""
    return 0.5 * (1.0 - math.exp(-2.0 * phase_noise_rms_rad ** 2))


def _levels(opo: OpoParams, eta_tot: float) -> Tuple[float, float, float, float]:
    """Lorentzian heights and corners of the squeezed and anti-squeezed quadratures."""
    x = opo.x
    half = 0.5 * opo.cavity_linewidth_hz
    sq_level = eta_tot * 4.0 * x / (1.0 + x) ** 2
    anti_level = eta_tot * 4.0 * x / (1.0 - x) ** 2
    return sq_level, (1.0 + x) * half, anti_level, (1.0 - x) * half


def opo_variances(opo: OpoParams, eta_tot: float, f=0.0):
    """Detected squeezed and anti-squeezed variances, shot-relative and linear.

    Args:
        opo: Operating point
        eta_tot: Total detection efficiency in [0, 1]
        f: Sideband frequency in Hz, scalar or array

    Returns:
        (V_sq, V_anti) after loss and phase-noise mixing
    """
    if not 0.0 <= eta_tot <= 1.0:
        raise DomainError(f"eta_tot = {eta_tot} outside [0, 1]")
    f_arr = np.asarray(f, dtype=float)
    sq_level, sq_corner, anti_level, anti_corner = _levels(opo, eta_tot)
    v_sq = 1.0 - sq_level / (1.0 + (f_arr / sq_corner) ** 2)
    v_anti = 1.0 + anti_level / (1.0 + (f_arr / anti_corner) ** 2)

    mix = phase_mixing(opo.phase_noise_rms_rad)
    v_sq, v_anti = (1.0 - mix) * v_sq + mix * v_anti, (1.0 - mix) * v_anti + mix * v_sq
    if np.ndim(f) == 0:
        return float(v_sq), float(v_anti)
    return v_sq, v_anti


def squeezed_signal_psd(opo: OpoParams, chain: EfficiencyChain, quadrature_angle: float = 0.0) -> NoisePsd:
    """Shot-relative PSD of the signal port measured at ``quadrature_angle``.

    Angle 0 is the squeezed quadrature, pi/2 the anti-squeezed one.
    """
    if not 0.0 <= quadrature_angle < math.pi:
        raise DomainError(f"quadrature angle {quadrature_angle} outside [0, pi)")
    eta_tot = total_efficiency(chain)
    sq_level, sq_corner, anti_level, anti_corner = _levels(opo, eta_tot)
    mix = phase_mixing(opo.phase_noise_rms_rad)
    c2, s2 = math.cos(quadrature_angle) ** 2, math.sin(quadrature_angle) ** 2
    w_sq = c2 * (1.0 - mix) + s2 * mix
    w_anti = 1.0 - w_sq
    return composite(
        white(1.0),
        lorentzian(-w_sq * sq_level, sq_corner),
        lorentzian(w_anti * anti_level, anti_corner),
    )


def predict_levels(
    opo: OpoParams, chain: EfficiencyChain, f: float = PREDICTION_FREQUENCY_HZ
) -> SqueezingPrediction:
    """Squeezing and anti-squeezing in dB relative to shot noise."""
    eta_tot = total_efficiency(chain)
    v_sq, v_anti = opo_variances(opo, eta_tot, f)
    log.info("eta_tot %.4f: squeezing %.2f dB, anti-squeezing %.2f dB", eta_tot, 10 * math.log10(v_sq), 10 * math.log10(v_anti))
    return SqueezingPrediction(eta_tot, 10.0 * math.log10(v_sq), 10.0 * math.log10(v_anti))
