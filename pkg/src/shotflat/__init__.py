"""Shotflat - balanced homodyne detection noise budgets and simulations.

Public API:
    derive_coefficients() - Linear response of both photocurrents
    analytic_budget() - Output PSD from coefficients and source PSDs
    welch_psd() / stitch_spans() - Spectrum-analyzer style estimates
    parse_scenario() - Load a scenario file
    run_budget() / run_monte_carlo() - Run a scenario
"""

from .electronics import (
    DarkSettings,
    DetectorDesign,
    ResistorType,
    dark_clearance_db,
    detector_output,
    flicker_psd,
    shot_psd,
)
from .engine import (
    RunReport,
    predict_squeezing,
    run_budget,
    run_cmrr,
    run_dither_scan,
    run_dust_monitor,
    run_monte_carlo,
)
from .errors import (
    BinMismatchError,
    ClippingError,
    DomainError,
    FeasibilityError,
    InfeasibleBalanceError,
    InsufficientDataError,
    LengthMismatchError,
    LinearizationError,
    ScenarioError,
    ScenarioParseError,
    ShotflatError,
    StitchGapError,
    UnmappedSourceError,
    ValidationError,
)
from .fields import (
    CouplingCoefficients,
    DifferentialCoefficients,
    HomodyneOptics,
    LocalOscillator,
    SignalField,
    SignalKind,
    Topology,
    apply_balance,
    cmrr_db,
    derive_coefficients,
    optimize_balance,
    shot_floor,
    subtract_output,
)
from .noise import (
    DustEventProcess,
    NoiseKind,
    NoisePsd,
    TimeSeries,
    psd_eval,
    sample_dust_events,
    synthesize_colored_noise,
)
from .pointing import (
    BeamProfile,
    JitterProcess,
    Modecleaner,
    PhotodiodeMap,
    modecleaner_filter,
    pointing_coefficient,
    response,
    synthetic_map,
)
from .scatter import (
    DitherDrive,
    ScatterLocation,
    ScatterPath,
    apply_dither,
    dither_amplitude_scan,
    fringe_intensity,
    scatter_psd,
)
from .scenario import ScenarioConfig, list_scenarios, parse_scenario
from .spectral import (
    SpanPlan,
    SpectrumTrace,
    analytic_budget,
    dark_correct,
    normalize_to_shot,
    read_trace_csv,
    stitch_spans,
    welch_psd,
    write_trace_csv,
)
from .squeezing import EfficiencyChain, OpoParams, opo_variances, squeezed_signal_psd, total_efficiency

from .__version__ import __version__

__all__ = [
    'BeamProfile',
    'BinMismatchError',
    'ClippingError',
    'CouplingCoefficients',
    'DarkSettings',
    'DetectorDesign',
    'DifferentialCoefficients',
    'DitherDrive',
    'DomainError',
    'DustEventProcess',
    'EfficiencyChain',
    'FeasibilityError',
    'HomodyneOptics',
    'InfeasibleBalanceError',
    'InsufficientDataError',
    'JitterProcess',
    'LengthMismatchError',
    'LinearizationError',
    'LocalOscillator',
    'Modecleaner',
    'NoiseKind',
    'NoisePsd',
    'OpoParams',
    'PhotodiodeMap',
    'ResistorType',
    'RunReport',
    'ScatterLocation',
    'ScatterPath',
    'ScenarioConfig',
    'ScenarioError',
    'ScenarioParseError',
    'ShotflatError',
    'SignalField',
    'SignalKind',
    'SpanPlan',
    'SpectrumTrace',
    'StitchGapError',
    'TimeSeries',
    'Topology',
    'UnmappedSourceError',
    'ValidationError',
    'analytic_budget',
    'apply_balance',
    'apply_dither',
    'cmrr_db',
    'dark_clearance_db',
    'dark_correct',
    'derive_coefficients',
    'detector_output',
    'dither_amplitude_scan',
    'flicker_psd',
    'fringe_intensity',
    'list_scenarios',
    'modecleaner_filter',
    'normalize_to_shot',
    'opo_variances',
    'optimize_balance',
    'parse_scenario',
    'pointing_coefficient',
    'predict_squeezing',
    'psd_eval',
    'read_trace_csv',
    'response',
    'run_budget',
    'run_cmrr',
    'run_dither_scan',
    'run_dust_monitor',
    'run_monte_carlo',
    'sample_dust_events',
    'scatter_psd',
    'shot_floor',
    'shot_psd',
    'squeezed_signal_psd',
    'stitch_spans',
    'subtract_output',
    'synthesize_colored_noise',
    'synthetic_map',
    'total_efficiency',
    'welch_psd',
    'write_trace_csv',
]
