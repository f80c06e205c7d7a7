"""Analog/mixed-signal path model: RC band-pass, 24-bit ADC, 60 Hz notch.

The band-pass is two ideally-buffered first-order RC sections (high-pass at
7.234 Hz, low-pass at 338.627 Hz) discretized by the bilinear transform
with the frequency response pinned exactly at each cutoff (prewarping).  It
runs at an oversampled internal rate; the device decimates afterwards.

The ADC is an ideal 24-bit bipolar converter referenced to 4.5 V at PGA 1,
so one count is 4.5/2^23 V and one window-code step is 64 counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError

ADC_BITS = 24
ADC_VREF = 4.5
ADC_CODE_MIN = -(1 << (ADC_BITS - 1))
ADC_CODE_MAX = (1 << (ADC_BITS - 1)) - 1

# 4.5/2^23 and 64*4.5/2^23 are exact binary fractions, so these floats are
# the exact rational values.
ADC_LSB_VOLTS = ADC_VREF / (1 << (ADC_BITS - 1))
WINDOW_STEP_VOLTS = 64 * ADC_LSB_VOLTS
FULL_SCALE_VOLTS = 511 * WINDOW_STEP_VOLTS


@dataclass(frozen=True)
class BandPassSpec:
    """First-order high-pass + first-order low-pass cutoffs in Hz."""

    f_hp: float = 7.234
    f_lp: float = 338.627

    def validate(self, fs: float) -> None:
        if not 0 < self.f_hp < self.f_lp:
            raise ConfigError(f"need 0 < f_hp < f_lp, got {self.f_hp}/{self.f_lp}")
        if fs < 4 * self.f_lp:
            raise ConfigError(
                f"sample rate {fs} Hz too low for f_lp={self.f_lp} Hz (need >= {4 * self.f_lp})"
            )


@dataclass(frozen=True)
class NotchSpec:
    """Band-stop center and -3 dB width in Hz."""

    f0: float = 60.0
    bandwidth: float = 2.0

    def validate(self, fs: float) -> None:
        if self.bandwidth <= 0 or self.f0 - self.bandwidth / 2 <= 0:
            raise ConfigError(f"invalid notch {self.f0} Hz / {self.bandwidth} Hz wide")
        if self.f0 + self.bandwidth / 2 >= fs / 2:
            raise ConfigError(f"notch at {self.f0} Hz does not fit under fs/2={fs / 2} Hz")


@dataclass(frozen=True)
class AdcSpec:
    """Ideal bipolar ADC: full scale +-vref/pga differential."""

    vref: float = ADC_VREF
    bits: int = ADC_BITS
    pga: int = 1

    @property
    def lsb_volts(self) -> float:
        return self.vref / self.pga / (1 << (self.bits - 1))


def _first_order_highpass(f_c: float, fs: float) -> tuple[np.ndarray, np.ndarray]:
    # Bilinear transform of s/(s+wc), prewarped so |H| matches at f_c.
    t = math.tan(math.pi * f_c / fs)
    b = np.array([1.0, -1.0]) / (1.0 + t)
    a = np.array([1.0, (t - 1.0) / (1.0 + t)])
    return b, a


def _first_order_lowpass(f_c: float, fs: float) -> tuple[np.ndarray, np.ndarray]:
    # Bilinear transform of wc/(s+wc), prewarped at f_c.
    t = math.tan(math.pi * f_c / fs)
    b = np.array([t, t]) / (1.0 + t)
    a = np.array([1.0, (t - 1.0) / (1.0 + t)])
    return b, a


def bandpass_coefficients(spec: BandPassSpec, fs: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """(b, a) pairs of the cascaded high-pass and low-pass sections."""
    spec.validate(fs)
    return [_first_order_highpass(spec.f_hp, fs), _first_order_lowpass(spec.f_lp, fs)]


def notch_coefficients(spec: NotchSpec, fs: float) -> tuple[np.ndarray, np.ndarray]:
    """Constrained biquad band-stop with unity gain at DC and Nyquist."""
    spec.validate(fs)
    w0 = 2 * math.pi * spec.f0 / fs
    # Q follows the -3 dB bandwidth: Q = f0/bw.
    alpha = math.sin(w0) * spec.bandwidth / (2 * spec.f0)
    b = np.array([1.0, -2.0 * math.cos(w0), 1.0]) / (1.0 + alpha)
    a = np.array([1.0, -2.0 * math.cos(w0) / (1.0 + alpha), (1.0 - alpha) / (1.0 + alpha)])
    return b, a


def frequency_response(b: np.ndarray, a: np.ndarray, f, fs: float) -> np.ndarray:
    """Complex response of a digital filter at frequency f (Hz)."""
    z = np.exp(-2j * np.pi * np.asarray(f, dtype=float) / fs)
    num = sum(bk * z**k for k, bk in enumerate(b))
    den = sum(ak * z**k for k, ak in enumerate(a))
    return num / den


class _StreamingFilter:
    """Cascade of (b, a) sections with per-channel recursive state."""

    def __init__(self, sections, channels: int):
        self._sections = sections
        self.channels = channels
        self.reset()

    def reset(self) -> None:
        self._state = [
            np.zeros((max(len(b), len(a)) - 1, self.channels)) for b, a in self._sections
        ]

    def process(self, block: np.ndarray) -> np.ndarray:
        """Filter a block shaped (n_samples, channels); state carries over."""
        block = np.atleast_2d(np.asarray(block, dtype=float))
        if block.shape[1] != self.channels:
            raise ValueError(f"expected {self.channels} channels, got {block.shape[1]}")
        out = block
        for i, (b, a) in enumerate(self._sections):
            out, self._state[i] = lfilter(b, a, out, axis=0, zi=self._state[i])
        return out

    def response_at(self, f, fs: float) -> np.ndarray:
        h = np.ones_like(np.asarray(f, dtype=complex))
        for b, a in self._sections:
            h = h * frequency_response(b, a, f, fs)
        return h


class BandPass(_StreamingFilter):
    """Streaming realization of the RC band-pass at a given sample rate."""

    def __init__(self, fs: float, spec: BandPassSpec = BandPassSpec(), channels: int = 8):
        self.spec = spec
        self.fs = fs
        super().__init__(bandpass_coefficients(spec, fs), channels)


class Notch(_StreamingFilter):
    """Streaming 60 Hz (by default) band-stop biquad."""

    def __init__(self, fs: float = 1000.0, spec: NotchSpec = NotchSpec(), channels: int = 8):
        self.spec = spec
        self.fs = fs
        super().__init__([notch_coefficients(spec, fs)], channels)


def adc_quantize(volts, spec: AdcSpec = AdcSpec()):
    """Ideal conversion: round to nearest count (ties away from zero), clamp.

    Accepts scalars or arrays; returns int or an int64 array.
    """
    v = np.asarray(volts, dtype=float)
    counts = np.sign(v) * np.floor(np.abs(v) / spec.lsb_volts + 0.5)
    counts = np.clip(counts, ADC_CODE_MIN, ADC_CODE_MAX).astype(np.int64)
    if np.ndim(volts) == 0:
        return int(counts)
    return counts


def code_to_volts(code):
    """Exact voltage of a decoded window value: code * 64 * vref / 2^23."""
    c = np.asarray(code)
    if np.any(np.abs(c) > 511):
        raise ValueError("window value outside [-511, 511]")
    v = c * WINDOW_STEP_VOLTS
    if np.ndim(code) == 0:
        return float(v)
    return v


def inject_mains(samples: np.ndarray, amplitude: float, fs: float, f: float = 60.0,
                 phases=None, rng: np.random.Generator | None = None,
                 start_index: int = 0) -> np.ndarray:
    """Add a mains-hum sinusoid per channel with independent phases.

    phases overrides the random draw; start_index offsets the time base so
    consecutive blocks stay phase-continuous.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if amplitude == 0:
        return samples
    n, channels = samples.shape
    if phases is None:
        rng = rng if rng is not None else np.random.default_rng()
        phases = rng.uniform(0, 2 * np.pi, size=channels)
    t = (start_index + np.arange(n))[:, None] / fs
    return samples + amplitude * np.sin(2 * np.pi * f * t + np.asarray(phases)[None, :])


class MainsHum:
    """Streaming wrapper around inject_mains with persistent phases."""

    def __init__(self, amplitude: float, fs: float, f: float = 60.0,
                 channels: int = 8, rng: np.random.Generator | None = None):
        if amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        self.amplitude = amplitude
        self.fs = fs
        self.f = f
        rng = rng if rng is not None else np.random.default_rng()
        self.phases = rng.uniform(0, 2 * np.pi, size=channels)
        self._index = 0

    def process(self, block: np.ndarray) -> np.ndarray:
        out = inject_mains(block, self.amplitude, self.fs, self.f,
                           phases=self.phases, start_index=self._index)
        self._index += np.atleast_2d(block).shape[0]
        return out
