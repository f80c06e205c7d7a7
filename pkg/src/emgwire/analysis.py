"""Validation metrics and end-to-end experiments.

Two experiments mirror the device's bench validation:

* a 1 Hz sine sized to sweep the full-scale range, hardware filter
  bypassed, checking the reconstructed peak and original-to-reproduced
  ratio;
* a replayed recording through the full chain (filter on), checking the
  mean squared error against the identically filtered reference.

Both run the real device pipeline in loopback on a virtual clock, so the
reported numbers reflect the digital model only: the reconstruction error
budget is one window step (truncation), not an analog front end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import DeviceConfig, LoopbackTransport, VirtualClock, run_device
from .errors import FormatError
from .host import DecodePipeline, blocks_to_array
from .signal_chain import BandPass, WINDOW_STEP_VOLTS
from .sources import ReplaySource, ReplaySpec, SineSpec

# One window step, the truncation error bound, in mV and mV^2.
WINDOW_STEP_MV = WINDOW_STEP_VOLTS * 1e3
MSE_BOUND_MV2 = 1.18e-3

SINE_PEAK_RANGE_MV = (17.51, 17.58)
SINE_RATIO_MIN_PCT = 99.0


def mse(a, b) -> float:
    """Mean squared difference of two equal-length signals."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size == 0:
        raise ValueError(f"length mismatch or empty: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def attenuation_db(in_peak: float, out_peak: float) -> float:
    """20*log10(in/out); positive when the chain attenuates."""
    if in_peak <= 0 or out_peak <= 0:
        raise ValueError("peaks must be positive")
    return 20.0 * math.log10(in_peak / out_peak)


@dataclass
class Spectrum:
    """Single-sided amplitude spectrum with Hann windowing."""

    freqs: np.ndarray
    amplitude: np.ndarray  # linear, sine-amplitude calibrated at bin centers
    power: np.ndarray  # |X|^2 weighted for one-sided energy sums
    fs: float
    n: int

    @property
    def resolution(self) -> float:
        return self.fs / self.n

    def magnitude_db(self, floor: float = 1e-12) -> np.ndarray:
        return 20.0 * np.log10(np.maximum(self.amplitude, floor))

    def peak_frequency(self) -> float:
        return float(self.freqs[int(np.argmax(self.amplitude))])

    def energy(self) -> float:
        """Estimate of sum(x^2) via the window-corrected spectrum."""
        return float(np.sum(self.power))

    def band_energy(self, f_lo: float, f_hi: float) -> float:
        mask = (self.freqs >= f_lo) & (self.freqs < f_hi)
        return float(np.sum(self.power[mask]))

    def fraction_above(self, f: float) -> float:
        total = self.energy()
        return self.band_energy(f, self.fs) / total if total > 0 else 0.0

    def write_csv(self, path: str) -> str:
        db = self.magnitude_db()
        with open(path, "w") as fh:
            fh.write("freq_hz,magnitude_db\n")
            for f, m in zip(self.freqs, db):
                fh.write(f"{f:.6f},{m:.6f}\n")
        return path


def spectrum(signal, fs: float, n: int | None = None) -> Spectrum:
    """Hann-windowed DFT magnitude spectrum of the first n samples."""
    x = np.asarray(signal, dtype=float).ravel()
    if len(x) < 64:
        raise ValueError(f"need at least 64 samples, got {len(x)}")
    n = len(x) if n is None else min(n, len(x))
    x = x[:n]
    # Periodic Hann, so integer-cycle tones land exactly on bins.
    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    spec = np.fft.rfft(x * w)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    amplitude = 2.0 * np.abs(spec) / w.sum()
    amplitude[0] /= 2.0
    if n % 2 == 0:
        amplitude[-1] /= 2.0
    weights = np.full(len(spec), 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    power = weights * np.abs(spec) ** 2 / (n * np.mean(w**2))
    return Spectrum(freqs, amplitude, power, fs, n)


@dataclass
class ValidationReport:
    experiment: str
    input_peak_mv: float = 0.0
    output_peak_mv: float = 0.0
    checks: dict = field(default_factory=dict)
    mse_mv2: float | None = None
    mse_raw_mv2: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ratio_pct(self) -> float:
        return 100.0 * self.output_peak_mv / self.input_peak_mv

    @property
    def attenuation(self) -> float:
        return attenuation_db(self.input_peak_mv, self.output_peak_mv)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def as_mapping(self) -> dict:
        out = {
            "experiment": self.experiment,
            "input_peak_mv": f"{self.input_peak_mv:.6f}",
            "output_peak_mv": f"{self.output_peak_mv:.6f}",
            "ratio_pct": f"{self.ratio_pct:.4f}",
            "attenuation_db": f"{self.attenuation:.6f}",
        }
        if self.mse_mv2 is not None:
            out["mse_filtered_mv2"] = f"{self.mse_mv2:.9f}"
        if self.mse_raw_mv2 is not None:
            out["mse_raw_mv2"] = f"{self.mse_raw_mv2:.9f}"
        for name, ok in self.checks.items():
            out[f"check_{name}"] = "pass" if ok else "FAIL"
        out["result"] = "pass" if self.passed else "FAIL"
        return out

    def as_text(self) -> str:
        lines = [f"== {self.experiment} =="]
        lines += [f"{k:>18}: {v}" for k, v in self.as_mapping().items() if k != "experiment"]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)

    def write_kv(self, path: str) -> str:
        with open(path, "w") as fh:
            for k, v in self.as_mapping().items():
                fh.write(f"{k}={v}\n")
        return path


def _loopback_run(cfg: DeviceConfig, source, duration_s: float, seed: int | None):
    """Drive the device into memory and decode everything back."""
    transport = LoopbackTransport()
    stats = run_device(cfg, source, duration_s, seed=seed,
                       transport=transport, clock=VirtualClock())
    pipeline = DecodePipeline(cfg.sample_rate)
    decoded = pipeline.push_bytes(bytes(transport.data))
    blocks = [rec for rec, _ in decoded]
    head_loss = stats.frames_sent - pipeline.frames_received
    return blocks, head_loss, stats


def validate_sine(amplitude_v: float = 0.01763, freq_hz: float = 1.0,
                  duration_s: float = 3.0, seed: int | None = 0) -> ValidationReport:
    """Full-scale sweep: sine through the bypassed chain, peak vs input."""
    cfg = DeviceConfig(transport="loopback", bypass_filter=True)
    blocks, _head, _stats = _loopback_run(cfg, SineSpec(freq_hz, amplitude_v),
                                          duration_s, seed)
    out = blocks_to_array(blocks)[:, 0]
    report = ValidationReport("sine full-scale sweep",
                              input_peak_mv=amplitude_v * 1e3,
                              output_peak_mv=float(np.max(np.abs(out))) * 1e3)
    lo, hi = SINE_PEAK_RANGE_MV
    report.checks["peak_in_range"] = lo <= report.output_peak_mv <= hi
    report.checks["ratio"] = report.ratio_pct >= SINE_RATIO_MIN_PCT
    report.notes.append(
        f"full scale is 511 window steps = {511 * WINDOW_STEP_MV:.4f} mV; "
        "inputs beyond it saturate"
    )
    return report


def filtered_reference(source_at, n_samples: int, cfg: DeviceConfig) -> np.ndarray:
    """Reference resampled, band-passed and decimated exactly like the device.

    source_at(fs) must build a fresh generator at the requested rate.
    """
    step = cfg.internal_rate // cfg.sample_rate
    x = source_at(cfg.internal_rate).next_block(n_samples * step)
    bp = BandPass(cfg.internal_rate, cfg.bandpass, x.shape[1])
    return bp.process(x)[::step]


class _ArraySource:
    """In-memory replay source: linear interpolation onto the device grid."""

    def __init__(self, values: np.ndarray, rate: float, fs: float):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[0] == 1:
            values = values.T
        if values.shape[1] == 1:
            values = np.repeat(values, 8, axis=1)
        self._t = np.arange(values.shape[0]) / rate
        self._values = values
        self.fs = fs
        self._index = 0

    def next_block(self, n: int) -> np.ndarray:
        t = (self._index + np.arange(n)) / self.fs
        self._index += n
        out = np.empty((n, self._values.shape[1]))
        for ch in range(self._values.shape[1]):
            out[:, ch] = np.interp(t, self._t, self._values[:, ch], left=0.0, right=0.0)
        return out


def validate_replay(reference, rate: float = 1000.0, gain: float = 1.0,
                    seed: int | None = 0) -> ValidationReport:
    """Replay through the filtered chain; MSE against the filtered reference.

    `reference` is a CSV path or an array of volts at `rate`.  The decoded
    output is compared against (a) the reference put through the same
    resample/filter/decimate path, where the only difference left is
    quantization, and (b) the raw reference, which retains energy the
    hardware filter removes.
    """
    if isinstance(reference, (str, bytes)):
        def source_at(fs):
            return ReplaySource(ReplaySpec(str(reference), gain, rate), fs)

        probe = source_at(1000)
        peak = float(np.max(np.abs(probe._values)))
        duration_s = probe.duration_s
    else:
        ref = np.atleast_2d(np.asarray(reference, dtype=float))
        if ref.shape[0] == 1:
            ref = ref.T
        ref = ref * gain

        def source_at(fs):
            return _ArraySource(ref, rate, fs)

        peak = float(np.max(np.abs(ref)))
        duration_s = ref.shape[0] / rate
    if peak >= 511 * WINDOW_STEP_VOLTS:
        raise FormatError("reference sweeps beyond full scale; rescale with gain")

    cfg = DeviceConfig(transport="loopback", bypass_filter=False)
    blocks, head_loss, _stats = _loopback_run(
        cfg, source_at(cfg.internal_rate), duration_s, seed)
    decoded = blocks_to_array(blocks)

    n_total = int(round(duration_s * cfg.sample_rate))
    ref_filtered = filtered_reference(source_at, n_total, cfg)
    ref_raw = source_at(cfg.sample_rate).next_block(n_total)

    n = decoded.shape[0]
    ref_f = ref_filtered[head_loss:head_loss + n]
    ref_r = ref_raw[head_loss:head_loss + n]
    decoded = decoded[:ref_f.shape[0]]
    ref_r = ref_r[:ref_f.shape[0]]

    mse_filtered = mse(decoded * 1e3, ref_f * 1e3)
    mse_raw = mse(decoded * 1e3, ref_r * 1e3)
    report = ValidationReport(
        "replay through filtered chain",
        input_peak_mv=peak * 1e3,
        output_peak_mv=float(np.max(np.abs(decoded))) * 1e3,
        mse_mv2=mse_filtered,
        mse_raw_mv2=mse_raw,
    )
    report.checks["mse_filtered_bound"] = mse_filtered <= MSE_BOUND_MV2
    report.notes.append(
        "error budget is one window step of truncation; "
        "MSE vs the raw reference additionally counts what the band-pass removes"
    )
    return report


def synthetic_semg(duration_s: float = 4.0, rate: float = 1000.0, seed: int = 7,
                   peak_v: float = 5e-3) -> np.ndarray:
    """Plausible single-channel muscle-burst signal for replay tests.

    Band-limited noise bursts with a slow baseline drift, so it exercises
    both the pass band and the sub-high-pass region.
    """
    rng = np.random.default_rng(seed)
    n = int(duration_s * rate)
    t = np.arange(n) / rate
    envelope = 0.15 + 0.85 * (np.sin(2 * np.pi * t / duration_s) ** 2)
    noise = rng.standard_normal(n)
    # crude band-limit: moving-average twice, keeps most energy under ~300 Hz
    kernel = np.ones(3) / 3
    noise = np.convolve(np.convolve(noise, kernel, "same"), kernel, "same")
    drift = 0.2 * np.sin(2 * np.pi * 1.5 * t)
    x = envelope * noise + drift
    return (x / np.max(np.abs(x)) * peak_v).reshape(-1, 1)
