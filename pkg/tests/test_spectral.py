"""Tests for PSD estimation, stitching, normalization and budgets."""

import math

import numpy as np
import pytest

from shotflat.errors import (
    BinMismatchError,
    DomainError,
    InsufficientDataError,
    StitchGapError,
    UnmappedSourceError,
)
from shotflat.fields import PORTS, HomodyneOptics, LocalOscillator, derive_coefficients, shot_floor, subtract_output
from shotflat.noise import TimeSeries, one_over_f, rin_model, white
from shotflat.spectral import (
    CSV_HEADER,
    ELECTRONIC,
    Span,
    SpanPlan,
    SpectrumTrace,
    Units,
    analytic_budget,
    band_mean_db,
    band_power,
    budget_terms,
    dark_correct,
    denormalize_from_shot,
    normalize_to_shot,
    read_trace_csv,
    required_samples,
    segment_length,
    stitch_spans,
    welch_psd,
    write_trace_csv,
)


def flat_trace(edge_hz, lines, value=1.0, units=Units.V2_PER_HZ):
    rbw = edge_hz / lines
    freqs = np.arange(lines + 1) * rbw
    return SpectrumTrace(freqs, np.full(freqs.size, value), rbw, 10, units)


class TestWelch:
    """Test the averaged periodogram."""

    def test_unit_white_level(self):
        """Unit-variance white noise sampled at twice the span reads 1/span."""
        rng = np.random.default_rng(2)
        span, lines, averages = 500.0, 100, 400
        n = required_samples(200, averages)
        series = TimeSeries(rng.standard_normal(n), 2 * span)

        trace = welch_psd(series, span, lines, averages)

        assert trace.frequencies[-1] == pytest.approx(span)
        assert trace.rbw_hz[0] == pytest.approx(5.0)
        assert np.all(trace.averages == averages)
        assert trace.values[1:-1].mean() == pytest.approx(1.0 / span, rel=0.02)

    def test_sine_band_power(self):
        """Band-integrated PSD of a tone equals its mean-square value."""
        fs, amplitude = 1000.0, 2.0
        t = np.arange(required_samples(200, 10)) / fs
        series = TimeSeries(amplitude * np.sin(2 * np.pi * 100.0 * t), fs)

        trace = welch_psd(series, 500.0, 100, 10)

        assert band_power(trace, 80.0, 120.0) == pytest.approx(amplitude ** 2 / 2, rel=0.01)

    def test_zero_record(self):
        """Zeros in, zeros out."""
        trace = welch_psd(TimeSeries(np.zeros(600), 100.0), 50.0, 50, 5)
        assert np.all(trace.values == 0.0)

    def test_variance_falls_with_averages(self):
        """Doubling the averages halves the estimate variance."""
        rng = np.random.default_rng(9)
        fs, span, lines = 200.0, 100.0, 50

        def spread(averages):
            n = required_samples(100, averages)
            estimates = np.array([
                welch_psd(TimeSeries(rng.standard_normal(n), fs), span, lines, averages).values[1:-1]
                for _ in range(100)
            ])
            return np.mean(estimates.var(axis=0) / estimates.mean(axis=0) ** 2)

        assert spread(10) / spread(20) == pytest.approx(2.0, rel=0.2)

    def test_insufficient_data(self):
        """Records shorter than the averages need are rejected with the required length."""
        series = TimeSeries(np.zeros(1000), 1000.0)
        with pytest.raises(InsufficientDataError, match='need'):
            welch_psd(series, 500.0, 100, 100)

    def test_undersampled_span(self):
        """The record rate must cover twice the span."""
        with pytest.raises(DomainError):
            welch_psd(TimeSeries(np.zeros(1000), 100.0), 100.0, 10, 1)

    def test_segment_length_must_be_whole(self):
        """Sample rate must hold a whole number of bins per segment."""
        assert segment_length(1000.0, 500.0, 100) == 200
        with pytest.raises(DomainError):
            segment_length(1000.0, 300.0, 7)


class TestSpanPlan:
    """Test span plan validation."""

    def test_rbw(self):
        """RBW is span over lines."""
        assert Span(800.0, 800, 10).rbw_hz == 1.0

    @pytest.mark.parametrize('spans', [
        (),
        (Span(100.0, 1, 10),),
        (Span(100.0, 100, 0),),
        (Span(800.0, 800, 1), Span(400.0, 800, 1)),
    ])
    def test_invalid_plans_rejected(self, spans):
        """Empty plans, single lines, zero averages and unsorted edges fail."""
        with pytest.raises(DomainError):
            SpanPlan(spans)


class TestStitch:
    """Test assembling spans into one trace."""

    def test_nine_span_cascade(self):
        """Each span takes over where the previous one ends."""
        traces = [flat_trace(12.5 * 2 ** k, 200, value=float(k)) for k in range(9)]

        stitched = stitch_spans(traces)

        assert len(stitched.seams) == 8
        assert np.all(np.diff(stitched.frequencies) > 0)
        assert np.all(np.diff(stitched.rbw_hz) >= 0)
        assert stitched.frequencies[0] == pytest.approx(2 * 12.5 / 200)
        assert stitched.frequencies[-1] == pytest.approx(3200.0)
        # bins come from the finest span that covers them
        assert np.all(stitched.values[stitched.frequencies <= 12.5] == 0.0)
        assert np.all(stitched.values[(stitched.frequencies > 1600.0)] == 8.0)

    def test_gap_detected(self):
        """A hole between spans is reported with its limits."""
        low = flat_trace(100.0, 100)
        high = SpectrumTrace(np.arange(500.0, 1001.0, 10.0), np.ones(51), 10.0, 10)

        with pytest.raises(StitchGapError, match='100-500'):
            stitch_spans([low, high])

    def test_single_trace_drops_low_bins(self):
        """Bins below two RBW are removed."""
        stitched = stitch_spans([flat_trace(100.0, 100)])
        assert stitched.frequencies[0] == pytest.approx(2.0)
        assert stitched.seams == ()

    def test_restitching_changes_nothing(self):
        """Stitching an already stitched trace returns it unchanged, seams included."""
        once = stitch_spans([flat_trace(12.5 * 2 ** k, 200, value=float(k)) for k in range(9)])

        twice = stitch_spans([once])

        np.testing.assert_array_equal(twice.frequencies, once.frequencies)
        np.testing.assert_array_equal(twice.values, once.values)
        np.testing.assert_array_equal(twice.rbw_hz, once.rbw_hz)
        np.testing.assert_array_equal(twice.averages, once.averages)
        assert twice.seams == once.seams
        assert len(twice.seams) == 8

    def test_mixed_units_rejected(self):
        """All traces must share units."""
        with pytest.raises(BinMismatchError):
            stitch_spans([flat_trace(10.0, 10), flat_trace(100.0, 10, units=Units.SHOT_RELATIVE_DB)])


class TestNormalization:
    """Test shot-relative conversion and dark correction."""

    def test_normalize_and_back(self):
        """Denormalizing restores the linear PSD."""
        shot = flat_trace(100.0, 100, value=2e-12)
        measured = flat_trace(100.0, 100, value=2e-11)

        relative = normalize_to_shot(measured, shot)
        assert relative.units is Units.SHOT_RELATIVE_DB
        np.testing.assert_allclose(relative.values, 10.0)

        restored = denormalize_from_shot(relative, shot)
        np.testing.assert_allclose(restored.values, measured.values, rtol=1e-12)

    def test_smoothed_shot_reference(self):
        """Smoothing divides by the broadband shot mean."""
        shot = flat_trace(100.0, 100)
        shot.values[::2] = 3.0
        measured = flat_trace(100.0, 100, value=2.0)

        relative = normalize_to_shot(measured, shot, smooth_shot=True)

        mean = shot.values.mean()
        np.testing.assert_allclose(relative.values, 10 * np.log10(2.0 / mean))

    def test_bin_mismatch(self):
        """Traces on different grids cannot be divided."""
        with pytest.raises(BinMismatchError):
            normalize_to_shot(flat_trace(100.0, 100), flat_trace(200.0, 100))

    def test_dark_correction(self):
        """A -11.6 dB reading over a -23.4 dB dark floor is about -11.9 dB."""
        assert dark_correct(-11.6, -23.4) == pytest.approx(-11.9, abs=0.05)

    def test_dark_correction_is_identity_without_dark(self):
        """Negligible dark noise changes nothing."""
        assert dark_correct(3.0, -200.0) == pytest.approx(3.0)

    def test_dark_correction_arrays(self):
        """Arrays are corrected element-wise."""
        corrected = dark_correct(np.array([0.0, 5.0]), np.array([-20.0, -20.0]))
        assert corrected.shape == (2,)
        assert corrected[1] > corrected[0]

    @pytest.mark.parametrize('measured, dark', [(-20.0, -10.0), (3.0, 1.0)])
    def test_dark_correction_domain(self, measured, dark):
        """Dark must lie below both the measurement and shot noise."""
        with pytest.raises(DomainError):
            dark_correct(measured, dark)

    def test_dark_clearance_needed_for_reading(self):
        """The clearance that turns -11.9 dB into a -11.6 dB reading is about 23 dB."""
        v_true = 10 ** (-1.19)
        v_meas = 10 ** (-1.16)
        v_dark = (v_meas - v_true) / (1 - v_true)
        assert 10 * math.log10(v_dark) == pytest.approx(-23.07, abs=0.05)
        assert dark_correct(-11.6, 10 * math.log10(v_dark)) == pytest.approx(-11.9, abs=1e-9)


class TestBudget:
    """Test the analytic sum over ports."""

    @pytest.fixture
    def coefficients(self):
        return derive_coefficients(LocalOscillator(1e-3), HomodyneOptics())

    def test_vacuum_everywhere_is_shot_floor(self, coefficients):
        """With no sources mapped every port is vacuum."""
        diff = subtract_output(coefficients, 1.0, 1.0001)
        freqs = np.array([10.0, 100.0, 1000.0])

        trace = analytic_budget(diff, [], freqs, quantum_scale=2.0)

        np.testing.assert_allclose(trace.values, 2.0 * shot_floor(diff), rtol=1e-12)

    def test_rin_cancelled_by_balance(self, coefficients):
        """A balanced detector suppresses LO intensity noise."""
        diff = subtract_output(coefficients)
        freqs = np.array([10.0, 100.0])

        trace = analytic_budget(diff, [('lo', rin_model(1e4))], freqs)

        residual = trace.values / shot_floor(diff) - 1.0
        assert np.all(np.abs(residual) <= 1e-4)

    def test_rin_leaks_through_imbalance(self, coefficients):
        """The LO term scales with the residual coefficient squared."""
        diff = subtract_output(coefficients, 1.0, 1.01)
        freqs = np.array([10.0])

        terms = budget_terms(diff, [('lo', rin_model(1e4))], freqs)

        assert terms['lo'][0] == pytest.approx(diff.lo ** 2 * rin_model(1e4)(10.0))

    def test_sources_on_one_port_add(self, coefficients):
        """Two sources on the signal port add their PSDs."""
        diff = subtract_output(coefficients)
        terms = budget_terms(diff, [('signal', white(0.5)), ('signal', white(0.25))], np.array([1.0]))
        assert terms['signal'][0] == pytest.approx(diff.signal ** 2 * 0.75)

    def test_electronic_sources_are_additive(self, coefficients):
        """Electronic PSDs are already in output units."""
        diff = subtract_output(coefficients)
        terms = budget_terms(diff, [(ELECTRONIC, white(1e-16))], np.array([1.0]), quantum_scale=5.0)
        assert terms[ELECTRONIC][0] == pytest.approx(1e-16)

    @pytest.mark.parametrize('port', list(PORTS) + [ELECTRONIC])
    def test_linear_in_each_source(self, coefficients, port):
        """The budget is additive and homogeneous in the PSD mapped to any port."""
        diff = subtract_output(coefficients, 1.0, 1.01)
        freqs = np.array([1.0, 30.0, 1000.0])
        scale = 1e-15

        def budget(*psds):
            return analytic_budget(diff, [(port, p) for p in psds], freqs, quantum_scale=scale).values

        first, second = one_over_f(2.0), white(3.0)
        base = budget(white(0.0))

        np.testing.assert_allclose(budget(first, second) + base, budget(first) + budget(second), rtol=1e-12)
        np.testing.assert_allclose(budget(white(9.0)) - base, 3.0 * (budget(second) - base), rtol=1e-9)

    def test_unknown_port(self, coefficients):
        """Sources must map to a known port."""
        with pytest.raises(UnmappedSourceError):
            budget_terms(subtract_output(coefficients), [('v3', white(1.0))], np.array([1.0]))


class TestTraceHelpers:
    """Test band statistics and CSV output."""

    def test_band_mean_needs_db(self):
        """Band means are taken in dB."""
        trace = flat_trace(100.0, 100, value=-3.0, units=Units.SHOT_RELATIVE_DB)
        assert band_mean_db(trace, 10.0, 20.0) == pytest.approx(-3.0)
        with pytest.raises(DomainError):
            band_mean_db(flat_trace(100.0, 100), 10.0, 20.0)
        with pytest.raises(DomainError):
            band_mean_db(trace, 200.0, 300.0)

    def test_band_power_needs_linear(self):
        """Band power integrates a linear PSD."""
        trace = flat_trace(100.0, 100, value=2.0)
        assert band_power(trace, 10.0, 19.5) == pytest.approx(20.0)
        with pytest.raises(DomainError):
            band_power(flat_trace(100.0, 100, units=Units.SHOT_RELATIVE_DB))

    def test_csv_layout(self, tmp_path):
        """CSV has a fixed header and reads back unchanged."""
        trace = flat_trace(100.0, 4, value=1.5e-13)

        path = write_trace_csv(trace, tmp_path / 'sub' / 'trace.csv')

        lines = path.read_text(encoding='utf-8').splitlines()
        assert lines[0] == ','.join(CSV_HEADER)
        assert lines[1].split(',')[2] == 'V2_per_Hz'
        loaded = read_trace_csv(path)
        np.testing.assert_array_equal(loaded.frequencies, trace.frequencies)
        np.testing.assert_array_equal(loaded.values, trace.values)
        assert loaded.units is Units.V2_PER_HZ

    def test_bad_csv_header(self, tmp_path):
        """Foreign CSV files are rejected."""
        path = tmp_path / 'other.csv'
        path.write_text('a,b\n1,2\n', encoding='utf-8')
        with pytest.raises(DomainError):
            read_trace_csv(path)
