"""Filter responses against analytic oracles; quantizer and volt conversion."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emgwire import codec
from emgwire.errors import ConfigError
from emgwire.signal_chain import (
    ADC_LSB_VOLTS,
    FULL_SCALE_VOLTS,
    WINDOW_STEP_VOLTS,
    AdcSpec,
    BandPass,
    BandPassSpec,
    MainsHum,
    Notch,
    NotchSpec,
    adc_quantize,
    code_to_volts,
    inject_mains,
    notch_coefficients,
)

FS_INTERNAL = 16000.0


def analytic_bandpass_gain(f, f_hp=7.234, f_lp=338.627):
    """|H(j2pi f)| of the ideal first-order RC cascade (continuous time)."""
    x_hp = f / f_hp
    x_lp = f / f_lp
    return (x_hp / math.sqrt(1 + x_hp**2)) * (1 / math.sqrt(1 + x_lp**2))


def measured_gain(filt, f, fs, seconds=2.0, settle=1.0):
    """Drive a unit sine and project the steady state onto quadrature."""
    n = int(seconds * fs)
    t = np.arange(n) / fs
    x = np.sin(2 * np.pi * f * t)
    y = filt.process(np.repeat(x[:, None], filt.channels, axis=1))[:, 0]
    keep = slice(int(settle * fs), n)
    tt, yy = t[keep], y[keep]
    a = 2 * np.mean(yy * np.sin(2 * np.pi * f * tt))
    b = 2 * np.mean(yy * np.cos(2 * np.pi * f * tt))
    return math.hypot(a, b)


class TestBandPass:
    def test_dc_blocked(self):
        bp = BandPass(FS_INTERNAL, channels=1)
        out = bp.process(np.full((int(2 * FS_INTERNAL), 1), 0.01))
        assert abs(out[-1, 0]) < 1e-6  # under 1 uV after 2 s

    @pytest.mark.parametrize("f,expected_gain", [
        (1.0, 0.136933),       # analytic oracle values, frozen
        (7.234, 0.706945),
        (50.0, 0.979080),
        (338.627, 0.706945),
        (450.0, 0.601202),
    ])
    def test_gain_matches_analytic_cascade(self, f, expected_gain):
        assert analytic_bandpass_gain(f) == pytest.approx(expected_gain, abs=1e-6)
        bp = BandPass(FS_INTERNAL, channels=1)
        seconds = max(2.0, 4.0 / f + 1.0)
        got = measured_gain(bp, f, FS_INTERNAL, seconds=seconds, settle=seconds - 2.0 / f)
        assert abs(20 * math.log10(got) - 20 * math.log10(expected_gain)) < 0.2

    def test_low_rate_rejected(self):
        with pytest.raises(ConfigError):
            BandPass(1000.0)

    def test_bad_cutoffs_rejected(self):
        with pytest.raises(ConfigError):
            BandPass(FS_INTERNAL, BandPassSpec(f_hp=400.0, f_lp=300.0))

    def test_linear_time_invariant(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((4000, 2))
        b = rng.standard_normal((4000, 2))
        out_sum = BandPass(FS_INTERNAL, channels=2).process(a + b)
        out_a = BandPass(FS_INTERNAL, channels=2).process(a)
        out_b = BandPass(FS_INTERNAL, channels=2).process(b)
        np.testing.assert_allclose(out_sum, out_a + out_b, rtol=1e-9, atol=1e-12)

    def test_streaming_matches_batch(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((1600, 8))
        whole = BandPass(FS_INTERNAL).process(x)
        streamed = []
        bp = BandPass(FS_INTERNAL)
        for i in range(0, 1600, 16):
            streamed.append(bp.process(x[i:i + 16]))
        np.testing.assert_allclose(np.vstack(streamed), whole, rtol=1e-12, atol=1e-15)

    def test_bounded_input_bounded_output(self):
        # l-infinity gain bound = l1 norm of the impulse response
        bp = BandPass(FS_INTERNAL, channels=1)
        impulse = np.zeros((int(FS_INTERNAL * 4), 1))
        impulse[0, 0] = 1.0
        l1 = np.sum(np.abs(bp.process(impulse)))
        rng = np.random.default_rng(2)
        x = rng.uniform(-1, 1, size=(int(FS_INTERNAL), 1))
        y = BandPass(FS_INTERNAL, channels=1).process(x)
        assert np.max(np.abs(y)) <= l1 * 1.01

    def test_reset_zeroes_state(self):
        bp = BandPass(FS_INTERNAL, channels=1)
        bp.process(np.ones((100, 1)))
        bp.reset()
        out = bp.process(np.zeros((100, 1)))
        assert np.all(out == 0)


def notch_response_oracle(spec, f, fs=1000.0):
    """|H(e^j2pi f/fs)| evaluated directly from the designed polynomials."""
    b, a = notch_coefficients(spec, fs)
    z = np.exp(-2j * np.pi * f / fs)
    return abs((b[0] + b[1] * z + b[2] * z**2) / (a[0] + a[1] * z + a[2] * z**2))


class TestNotch:
    def test_60hz_suppressed(self):
        fs = 1000.0
        notch = Notch(fs, channels=1)
        t = np.arange(int(3 * fs)) / fs
        x = np.sin(2 * np.pi * 60.0 * t)[:, None]
        y = notch.process(x)[int(fs):, 0]  # discard 1 s transient
        assert np.sqrt(np.mean(y**2)) <= 0.1 * np.sqrt(0.5)

    def test_60hz_attenuation_at_least_20db(self):
        # at the exact center the zero pins the response to (numerically) nothing
        assert notch_response_oracle(NotchSpec(), 60.0) < 10 ** (-20 / 20)

    def test_dc_passes_unity(self):
        notch = Notch(channels=1)
        out = notch.process(np.ones((3000, 1)))
        assert out[-1, 0] == pytest.approx(1.0, abs=0.01)

    @pytest.mark.parametrize("f", [30.0, 100.0, 120.0])
    def test_far_bins_within_1db(self, f):
        oracle = notch_response_oracle(NotchSpec(), f)
        assert abs(20 * math.log10(oracle)) < 1.0
        notch = Notch(channels=1)
        got = measured_gain(notch, f, 1000.0, seconds=3.0, settle=2.0)
        assert abs(20 * math.log10(got)) < 1.0

    def test_invalid_spec(self):
        with pytest.raises(ConfigError):
            Notch(1000.0, NotchSpec(f0=600.0))
        with pytest.raises(ConfigError):
            Notch(1000.0, NotchSpec(f0=1.0, bandwidth=4.0))


class TestAdcQuantize:
    def test_zero(self):
        assert adc_quantize(0.0) == 0

    def test_one_lsb(self):
        # one count is 0.53644 uV at vref 4.5 V, PGA 1
        assert ADC_LSB_VOLTS == pytest.approx(0.53644e-6, abs=1e-11)
        assert adc_quantize(0.53644e-6) == 1

    def test_clamps_beyond_full_scale(self):
        assert adc_quantize(5.0) == 2**23 - 1
        assert adc_quantize(-5.0) == -(2**23)

    def test_rounds_to_nearest(self):
        assert adc_quantize(1.4 * ADC_LSB_VOLTS) == 1
        assert adc_quantize(1.6 * ADC_LSB_VOLTS) == 2
        assert adc_quantize(-1.6 * ADC_LSB_VOLTS) == -2

    def test_array_input(self):
        out = adc_quantize(np.array([0.0, ADC_LSB_VOLTS, 5.0]))
        assert list(out) == [0, 1, 2**23 - 1]

    def test_pga_scales_lsb(self):
        assert AdcSpec(pga=2).lsb_volts == ADC_LSB_VOLTS / 2


class TestCodeToVolts:
    def test_exact_rational_step(self):
        assert WINDOW_STEP_VOLTS == float(Fraction(9, 2) * 64 / 2**23)
        assert code_to_volts(1) == pytest.approx(34.33e-6, abs=0.01e-6)

    def test_zero(self):
        assert code_to_volts(0) == 0.0

    def test_full_scale(self):
        assert code_to_volts(511) == pytest.approx(17.544e-3, abs=1e-6)
        assert FULL_SCALE_VOLTS == code_to_volts(511)

    def test_range_checked(self):
        with pytest.raises(ValueError):
            code_to_volts(512)
        with pytest.raises(ValueError):
            code_to_volts(-512)

    @given(st.integers(-511, 511))
    def test_odd_symmetry(self, c):
        assert code_to_volts(-c) == -code_to_volts(c)


class TestEndToEndQuantization:
    @settings(max_examples=300)
    @given(st.floats(-17.5e-3, 17.5e-3, allow_nan=False))
    def test_error_within_one_window_step(self, v):
        raw = adc_quantize(v)
        value = codec.decode_window(codec.encode_window(raw))
        assert abs(code_to_volts(value) - v) <= 34.34e-6


class TestInjectMains:
    def test_zero_amplitude_identity(self):
        x = np.ones((100, 8))
        assert inject_mains(x, 0.0, fs=1000.0) is x or np.all(inject_mains(x, 0.0, fs=1000.0) == x)

    def test_rms_of_pure_hum(self):
        rng = np.random.default_rng(3)
        out = inject_mains(np.zeros((100000, 8)), 2e-3, fs=16000.0, rng=rng)
        rms = np.sqrt(np.mean(out**2, axis=0))
        np.testing.assert_allclose(rms, 2e-3 / math.sqrt(2), rtol=0.01)

    def test_block_continuity(self):
        hum = MainsHum(1e-3, fs=1000.0, channels=2, rng=np.random.default_rng(4))
        a = np.vstack([hum.process(np.zeros((30, 2))) for _ in range(10)])
        hum2 = MainsHum(1e-3, fs=1000.0, channels=2, rng=np.random.default_rng(4))
        b = hum2.process(np.zeros((300, 2)))
        np.testing.assert_allclose(a, b, atol=1e-15)

    def test_negative_amplitude_rejected(self):
        with pytest.raises(ValueError):
            inject_mains(np.zeros((4, 8)), -1.0, fs=1000.0)

    def test_spectrum_peaks_at_mains_frequency(self):
        from emgwire.analysis import spectrum

        out = inject_mains(np.zeros((4000, 8)), 1e-3, fs=1000.0,
                           rng=np.random.default_rng(5))
        spec = spectrum(out[:, 0], 1000.0)
        assert abs(spec.peak_frequency() - 60.0) <= spec.resolution
