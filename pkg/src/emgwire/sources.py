"""8-channel test signal sources for the device simulator.

All sources produce blocks shaped (n, 8) in volts at the rate they were
built for, and are deterministic for a given seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import butter, fftconvolve, sosfilt

from .errors import FormatError

CHANNELS = 8

# Burst noise band limit; sEMG energy lives below a few hundred Hz.
GESTURE_NOISE_CUTOFF_HZ = 350.0
GESTURE_NOISE_ORDER = 6
GESTURE_REST_RMS_VOLTS = 20e-6
GESTURE_RAMP_S = 0.05


@dataclass(frozen=True)
class SineSpec:
    """Same sinusoid on all channels."""

    freq: float = 1.0
    amplitude: float = 0.01763


@dataclass(frozen=True)
class ReplaySpec:
    """Replay a CSV recording, resampled by linear interpolation.

    The file holds one sample per row: an optional leading time column in
    seconds, then one or eight voltage columns (one channel is broadcast
    to all eight).  Without a time column the declared rate applies.
    """

    path: str
    gain: float = 1.0
    rate: float = 1000.0


@dataclass(frozen=True)
class GestureSegment:
    duration_s: float
    channels: frozenset[int]  # active channel numbers, 1-based
    amplitude: float  # approximate burst peak in volts


def default_gesture_script() -> tuple[GestureSegment, ...]:
    """6 s rest / contract / rest pattern, bursting on channels 5 and 6."""
    return (
        GestureSegment(2.0, frozenset(), 0.0),
        GestureSegment(2.0, frozenset({5, 6}), 5e-3),
        GestureSegment(2.0, frozenset(), 0.0),
    )


@dataclass(frozen=True)
class GestureSpec:
    """Scripted contraction bursts of band-limited noise."""

    segments: tuple[GestureSegment, ...] = field(default_factory=default_gesture_script)

    def __post_init__(self):
        if sum(s.duration_s for s in self.segments) <= 0:
            raise ValueError("gesture script must have positive total duration")

    @property
    def duration_s(self) -> float:
        return sum(s.duration_s for s in self.segments)


class SineSource:
    def __init__(self, spec: SineSpec, fs: float):
        self.spec = spec
        self.fs = fs
        self._index = 0

    def next_block(self, n: int) -> np.ndarray:
        t = (self._index + np.arange(n)) / self.fs
        self._index += n
        wave = self.spec.amplitude * np.sin(2 * np.pi * self.spec.freq * t)
        return np.repeat(wave[:, None], CHANNELS, axis=1)


class ReplaySource:
    """Plays back a recording, zero-padded past its end."""

    def __init__(self, spec: ReplaySpec, fs: float):
        self.spec = spec
        self.fs = fs
        self._index = 0
        t, values = _load_replay_csv(spec.path)
        if t is not None:
            dt = np.diff(t)
            if np.any(dt <= 0):
                raise FormatError(f"{spec.path}: time column must be strictly increasing")
            rate = 1.0 / float(np.median(dt))
        else:
            rate = spec.rate
            t = np.arange(len(values)) / rate
        self.source_rate = rate
        if values.shape[1] == 1:
            values = np.repeat(values, CHANNELS, axis=1)
        elif values.shape[1] >= CHANNELS:
            values = values[:, :CHANNELS]
        else:
            raise FormatError(
                f"{spec.path}: expected 1 or {CHANNELS} signal columns, got {values.shape[1]}"
            )
        self._t = t
        self._values = values * spec.gain
        self.duration_s = float(t[-1]) + 1.0 / rate

    def next_block(self, n: int) -> np.ndarray:
        t = (self._index + np.arange(n)) / self.fs
        self._index += n
        out = np.empty((n, CHANNELS))
        for ch in range(CHANNELS):
            out[:, ch] = np.interp(t, self._t, self._values[:, ch], left=0.0, right=0.0)
        return out


class GestureSource:
    """Band-limited noise bursts following the gesture script.

    Active channels get noise scaled so ~3-sigma peaks reach the segment
    amplitude; idle channels carry a small baseline.  Segment edges are
    smoothed with short raised-cosine ramps.
    """

    def __init__(self, spec: GestureSpec, fs: float, rng: np.random.Generator):
        self.spec = spec
        self.fs = fs
        self._rng = rng
        self._index = 0
        self._sos = butter(
            GESTURE_NOISE_ORDER, GESTURE_NOISE_CUTOFF_HZ, btype="low", fs=fs, output="sos"
        )
        self._zi = np.zeros((self._sos.shape[0], 2, CHANNELS))
        # Unit white noise through the low-pass keeps only its share of the
        # band; derive the output RMS from the response so amplitude
        # scaling is exact without a calibration run.
        f = np.linspace(0, fs / 2, 4096)
        h = np.ones_like(f, dtype=complex)
        for b0, b1, b2, a0, a1, a2 in self._sos:
            z = np.exp(-2j * np.pi * f / fs)
            h *= (b0 + b1 * z + b2 * z**2) / (a0 + a1 * z + a2 * z**2)
        self._noise_rms = float(np.sqrt(np.trapezoid(np.abs(h) ** 2, f) / (fs / 2)))
        self._envelope = self._build_envelopes()

    def _build_envelopes(self) -> np.ndarray:
        """Per-sample target RMS per channel for the whole script."""
        total = int(round(self.spec.duration_s * self.fs))
        env = np.full((total, CHANNELS), GESTURE_REST_RMS_VOLTS)
        start = 0
        for seg in self.spec.segments:
            n = int(round(seg.duration_s * self.fs))
            for ch in seg.channels:
                env[start:start + n, ch - 1] = max(seg.amplitude / 3.0, GESTURE_REST_RMS_VOLTS)
            start += n
        ramp = int(GESTURE_RAMP_S * self.fs)
        if ramp > 1:
            kernel = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(ramp) / ramp)
            kernel /= kernel.sum()
            env = fftconvolve(env, kernel[:, None], mode="same", axes=0)
        return env

    def next_block(self, n: int) -> np.ndarray:
        white = self._rng.standard_normal((n, CHANNELS))
        shaped, self._zi = sosfilt(self._sos, white, axis=0, zi=self._zi)
        idx = np.minimum(self._index + np.arange(n), len(self._envelope) - 1)
        self._index += n
        return shaped / self._noise_rms * self._envelope[idx]


def make_source(spec, fs: float, rng: np.random.Generator | None = None):
    """Build the generator matching the spec; deterministic given rng."""
    if isinstance(spec, SineSpec):
        return SineSource(spec, fs)
    if isinstance(spec, ReplaySpec):
        return ReplaySource(spec, fs)
    if isinstance(spec, GestureSpec):
        return GestureSource(spec, fs, rng if rng is not None else np.random.default_rng())
    raise TypeError(f"unknown source spec {type(spec).__name__}")


def _load_replay_csv(path) -> tuple[np.ndarray | None, np.ndarray]:
    """Parse a replay file into (time column or None, value columns)."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            row = [cell.strip() for cell in row if cell.strip() != ""]
            if not row:
                continue
            if lineno == 1 and any(not _is_number(c) for c in row):
                continue  # header
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
    if not rows:
        raise FormatError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise FormatError(f"{path}: ragged rows (widths {sorted(widths)})")
    data = np.asarray(rows)
    # A strictly increasing first column alongside others is a time axis.
    if data.shape[1] >= 2 and np.all(np.diff(data[:, 0]) > 0):
        return data[:, 0], data[:, 1:]
    return None, data


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False
