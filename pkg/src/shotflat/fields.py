"""Linearized two-port model of the balanced homodyne detector.

The effective fields on the two photodiodes are

    F1 = sqrt(eta1) * (sqrt(1-eta_l) * (sqrt(eta_bs) A + sqrt(1-eta_bs) B)
                       + sqrt(eta_l) V0) + sqrt(1-eta1) V1
    F2 = sqrt(eta2) * (sqrt(eta_bs) B - sqrt(1-eta_bs) A) + sqrt(1-eta2) V2

with A = alpha + da the local oscillator and B = db the signal (no coherent
amplitude). Photocurrents follow from linearizing F^dagger F around the mean
field: i = m^2 + m * dX_F, where m is the mean amplitude and dX_F the
amplitude quadrature of F. Every coefficient below comes from that expansion.

Photocurrents are in photon-flux units (alpha^2 = photons/s). Conversion to
amperes and volts happens in ``shotflat.electronics``.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Dict, Optional, Tuple

from scipy import constants

from .errors import DomainError, InfeasibleBalanceError

if TYPE_CHECKING:
    from .squeezing import OpoParams

log = logging.getLogger(__name__)

WAVELENGTH_M = 1064e-9
PORTS = ('lo', 'signal', 'v0', 'v1', 'v2')

# One-sided PSD of a vacuum amplitude quadrature in photon-flux units
VACUUM_PSD = 2.0

# |differential LO| below this fraction of the single-diode response counts as a null
PERFECT_TOLERANCE = 1e-12
PERFECT_CMRR = math.inf


class Topology(str, Enum):
    VARIABLE_GAIN = 'variable_gain'
    CURRENT_SUBTRACTING = 'current_subtracting'


class SignalKind(str, Enum):
    VACUUM = 'vacuum'
    SQUEEZED = 'squeezed'


def photon_energy(wavelength_m: float = WAVELENGTH_M) -> float:
    """Energy of one photon in joules."""
    return constants.h * constants.c / wavelength_m


@dataclass(frozen=True)
class LocalOscillator:
    """Bright reference beam, A = alpha + da."""

    power_w: float
    wavelength_m: float = WAVELENGTH_M

    def __post_init__(self):
        if not self.power_w >= 0:
            raise DomainError(f"local oscillator power must be >= 0 W, got {self.power_w}")

    @property
    def amplitude_alpha(self) -> float:
        """Mean amplitude in sqrt(photons/s)."""
        return math.sqrt(self.power_w / photon_energy(self.wavelength_m))


@dataclass(frozen=True)
class SignalField:
    """Field entering the signal port; its coherent amplitude is always zero.

    A squeezed field carries the OPO operating point that produces it.
    """

    kind: SignalKind = SignalKind.VACUUM
    squeeze_params: Optional['OpoParams'] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', SignalKind(self.kind))
        if self.kind is SignalKind.SQUEEZED and self.squeeze_params is None:
            raise DomainError("a squeezed signal field needs OPO parameters")
        if self.kind is SignalKind.VACUUM and self.squeeze_params is not None:
            raise DomainError("a vacuum signal field takes no OPO parameters")

    @classmethod
    def squeezed(cls, params: 'OpoParams') -> 'SignalField':
        return cls(SignalKind.SQUEEZED, params)

    @property
    def is_squeezed(self) -> bool:
        return self.kind is SignalKind.SQUEEZED

    @property
    def coherent_amplitude(self) -> float:
        return 0.0


@dataclass(frozen=True)
class HomodyneOptics:
    """Splitting ratio, single-arm loss and photodiode efficiencies."""

    eta_bs: float = 0.5
    eta_l: float = 0.0
    eta_pd1: float = 1.0
    eta_pd2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eta_bs < 1.0:
            raise DomainError(f"eta_bs = {self.eta_bs} outside (0, 1)")
        if not 0.0 <= self.eta_l <= 1.0:
            raise DomainError(f"eta_l = {self.eta_l} outside [0, 1]")
        for name in ('eta_pd1', 'eta_pd2'):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise DomainError(f"{name} = {value} outside (0, 1]")


@dataclass(frozen=True)
class DiodeCoefficients:
    """Linear response of one photocurrent.

    ``dc`` is the mean photocurrent normalized by alpha^2; the port
    coefficients multiply the quadratures dX_a, dX_b, dX_V0, dX_V1, dX_V2 and
    already include alpha.
    """

    dc: float
    lo: float
    signal: float
    v0: float
    v1: float
    v2: float

    def port(self, name: str) -> float:
        return getattr(self, name)

    def sum_of_squares(self) -> float:
        return sum(self.port(p) ** 2 for p in PORTS)


@dataclass(frozen=True)
class CouplingCoefficients:
    alpha: float
    diode1: DiodeCoefficients
    diode2: DiodeCoefficients

    def diode(self, index: int) -> DiodeCoefficients:
        if index == 1:
            return self.diode1
        if index == 2:
            return self.diode2
        raise DomainError(f"diode index must be 1 or 2, got {index}")

    def dc_flux(self, index: int) -> float:
        """Mean photocurrent of a diode in photons/s."""
        return self.diode(index).dc * self.alpha ** 2


@dataclass(frozen=True)
class DifferentialCoefficients:
    """Single channel g1*i1 - g2*i2."""

    g1: float
    g2: float
    topology: Topology
    dc: float
    lo: float
    signal: float
    v0: float
    v1: float
    v2: float
    alpha: float

    def port(self, name: str) -> float:
        return getattr(self, name)

    def coefficients(self) -> Dict[str, float]:
        return {p: self.port(p) for p in PORTS}


def derive_coefficients(lo: LocalOscillator, optics: HomodyneOptics) -> CouplingCoefficients:
    """Expand F^dagger F of both diodes to first order in the fluctuations.

    Args:
        lo: Local oscillator
        optics: Splitting ratio, arm loss and diode efficiencies

    Returns:
        Coefficients of both photocurrents
    """
    alpha = lo.amplitude_alpha
    eta_bs, eta_l = optics.eta_bs, optics.eta_l
    eta1, eta2 = optics.eta_pd1, optics.eta_pd2

    # Diode 1: amplitude weights of each input inside F1
    w1 = {
        'lo': math.sqrt(eta1 * (1 - eta_l) * eta_bs),
        'signal': math.sqrt(eta1 * (1 - eta_l) * (1 - eta_bs)),
        'v0': math.sqrt(eta1 * eta_l),
        'v1': math.sqrt(1 - eta1),
        'v2': 0.0,
    }
    mean1 = w1['lo'] * alpha
    diode1 = DiodeCoefficients(dc=w1['lo'] ** 2, **{p: mean1 * w for p, w in w1.items()})

    # Diode 2: the LO enters with a minus sign
    w2 = {
        'lo': -math.sqrt(eta2 * (1 - eta_bs)),
        'signal': math.sqrt(eta2 * eta_bs),
        'v0': 0.0,
        'v1': 0.0,
        'v2': math.sqrt(1 - eta2),
    }
    mean2 = w2['lo'] * alpha
    diode2 = DiodeCoefficients(dc=w2['lo'] ** 2, **{p: mean2 * w for p, w in w2.items()})

    return CouplingCoefficients(alpha=alpha, diode1=diode1, diode2=diode2)


def subtract_output(
    coeffs: CouplingCoefficients,
    g1: float = 1.0,
    g2: float = 1.0,
    topology: Topology = Topology.VARIABLE_GAIN,
) -> DifferentialCoefficients:
    """Combine the two photocurrents into the detector output.

    Args:
        coeffs: Per-diode coefficients
        g1: Gain applied to diode 1
        g2: Gain applied to diode 2
        topology: Detector design; current subtraction shares one gain

    Returns:
        Coefficients of g1*i1 - g2*i2
    """
    topology = Topology(topology)
    if g1 <= 0 or g2 <= 0:
        raise DomainError(f"gains must be positive, got g1={g1}, g2={g2}")
    if topology is Topology.CURRENT_SUBTRACTING and g1 != g2:
        raise DomainError("current_subtracting applies one gain to both photocurrents (g1 must equal g2)")

    d1, d2 = coeffs.diode1, coeffs.diode2
    return DifferentialCoefficients(
        g1=g1,
        g2=g2,
        topology=topology,
        dc=g1 * d1.dc - g2 * d2.dc,
        alpha=coeffs.alpha,
        **{p: g1 * d1.port(p) - g2 * d2.port(p) for p in PORTS},
    )


def shot_floor(diff: DifferentialCoefficients) -> float:
    """Output level with every port in vacuum, in coefficient-squared units."""
    return sum(c ** 2 for c in diff.coefficients().values())


def cmrr_db(diff: DifferentialCoefficients, single_diode_ref: CouplingCoefficients) -> float:
    """Common-mode rejection referenced to the single-diode LO response.

    Args:
        diff: Differential coefficients under test
        single_diode_ref: Coefficients whose diode-1 LO term sets the reference

    Returns:
        CMRR in dB, ``PERFECT_CMRR`` (infinity) for an exact null
    """
    reference = abs(diff.g1 * single_diode_ref.diode1.lo)
    if reference == 0.0:
        raise DomainError("single-diode LO coefficient is zero, CMRR undefined")
    residual = abs(diff.lo)
    if residual <= PERFECT_TOLERANCE * reference:
        return PERFECT_CMRR
    return 20.0 * math.log10(reference / residual)


def optimize_balance(optics: HomodyneOptics, topology: Topology) -> float:
    """Parameter that nulls the differential LO coefficient.

    Args:
        optics: Fixed diode efficiencies and arm loss; eta_bs is used only
            for the variable gain design
        topology: Detector design

    Returns:
        g2/g1 for variable_gain, eta_bs for current_subtracting

    Raises:
        InfeasibleBalanceError: If no value in range nulls the LO term
    """
    topology = Topology(topology)
    arm1 = optics.eta_pd1 * (1 - optics.eta_l)
    if topology is Topology.VARIABLE_GAIN:
        ratio = arm1 * optics.eta_bs / (optics.eta_pd2 * (1 - optics.eta_bs))
        if ratio <= 0:
            raise InfeasibleBalanceError("diode 1 receives no light, no gain ratio balances the detector")
        log.debug("variable gain balance: g2/g1 = %.9f", ratio)
        return ratio

    eta_bs = optics.eta_pd2 / (arm1 + optics.eta_pd2)
    if not 0.0 < eta_bs < 1.0:
        raise InfeasibleBalanceError(f"balancing requires eta_bs = {eta_bs}, outside (0, 1)")
    log.debug("current subtracting balance: eta_bs = %.9f", eta_bs)
    return eta_bs


def apply_balance(
    optics: HomodyneOptics, topology: Topology, g1: float, g2: float
) -> Tuple[HomodyneOptics, float, float]:
    """Return optics and gains adjusted so the LO term is nulled."""
    topology = Topology(topology)
    value = optimize_balance(optics, topology)
    if topology is Topology.VARIABLE_GAIN:
        return optics, g1, g1 * value
    return replace(optics, eta_bs=value), g1, g1
