"""Device side: source -> filter -> quantize -> encode -> paced byte stream.

The signal path runs at an oversampled internal rate (default 16 kHz) so
the RC band-pass model stays faithful near its 338.627 Hz cutoff, then
decimates to the output rate by keeping the first sample of each block
(output sample n is internal sample n * oversample, i.e. exactly t=n/rate).

Frames are paced against an absolute schedule, one per output sample
period, which keeps the byte rate under the UART budget by construction.
The transport is a plain byte sink standing in for a transparent serial
bridge; the baud ceiling is enforced by the pacing, not by the medium.
"""

from __future__ import annotations

import socket
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import codec
from .errors import ConfigError, TransportError
from .signal_chain import AdcSpec, BandPass, BandPassSpec, MainsHum, adc_quantize
from .sources import make_source


@dataclass(frozen=True)
class DeviceConfig:
    sample_rate: int = 1000
    baud: int = 115200
    transport: str = "loopback"  # loopback | stdout | tcp:HOST:PORT
    bypass_filter: bool = False
    mains_amplitude: float = 0.0
    internal_rate: int = 16000
    bandpass: BandPassSpec = field(default_factory=BandPassSpec)
    adc: AdcSpec = field(default_factory=AdcSpec)

    def validate(self) -> None:
        check_link_budget(self.baud, codec.frame_bits(codec.FRAME_LEN), self.sample_rate)
        if self.internal_rate % self.sample_rate != 0:
            raise ConfigError(
                f"internal rate {self.internal_rate} not a multiple of {self.sample_rate}"
            )
        if not self.bypass_filter:
            self.bandpass.validate(self.internal_rate)


def check_link_budget(baud: float, frame_bits: int, sample_rate: float) -> None:
    """Reject links that cannot carry one frame per sample period."""
    tp = codec.throughput(baud, frame_bits)
    if tp <= sample_rate:
        raise ConfigError(
            f"throughput {tp:.2f} Hz at {baud} bps / {frame_bits} bits per frame "
            f"cannot sustain {sample_rate} SPS"
        )


class RealClock:
    def now(self) -> float:
        return time.perf_counter()

    def sleep_until(self, t: float) -> None:
        delay = t - time.perf_counter()
        if delay > 0:
            time.sleep(delay)


class VirtualClock:
    """Advances instantly; runs paced loops as fast as the CPU allows."""

    def __init__(self, start: float = 0.0):
        self._t = start

    def now(self) -> float:
        return self._t

    def sleep_until(self, t: float) -> None:
        if t > self._t:
            self._t = t


class LoopbackTransport:
    """Accumulates the stream in memory; the reader side for tests/validation."""

    def __init__(self):
        self.data = bytearray()
        self.closed = False

    def send(self, payload: bytes) -> None:
        self.data.extend(payload)

    def close(self) -> None:
        self.closed = True


class StdoutTransport:
    def __init__(self):
        self._out = sys.stdout.buffer

    def send(self, payload: bytes) -> None:
        try:
            self._out.write(payload)
        except (BrokenPipeError, ValueError) as exc:
            raise TransportError(f"stdout closed: {exc}") from exc

    def close(self) -> None:
        try:
            self._out.flush()
        except (BrokenPipeError, ValueError):
            pass


class TcpTransport:
    def __init__(self, host: str, port: int, timeout: float = 5.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
        self._sock.settimeout(timeout)

    def send(self, payload: bytes) -> None:
        try:
            self._sock.sendall(payload)
        except OSError as exc:
            raise TransportError(f"connection lost: {exc}") from exc

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def open_transport(spec: str):
    if spec == "loopback":
        return LoopbackTransport()
    if spec == "stdout":
        return StdoutTransport()
    if spec.startswith("tcp:"):
        try:
            host, port = spec[4:].rsplit(":", 1)
            return TcpTransport(host, int(port))
        except ValueError as exc:
            raise ConfigError(f"bad tcp transport {spec!r} (want tcp:HOST:PORT)") from exc
    raise ConfigError(f"unknown transport {spec!r}")


class EncodePipeline:
    """Turns one source block per tick into one wire frame."""

    def __init__(self, cfg: DeviceConfig, source, rng: np.random.Generator):
        cfg.validate()
        self.cfg = cfg
        self.source = source
        self.oversample = cfg.internal_rate // cfg.sample_rate
        self._bandpass = (
            None if cfg.bypass_filter
            else BandPass(cfg.internal_rate, cfg.bandpass, codec.CHANNELS)
        )
        self._hum = (
            MainsHum(cfg.mains_amplitude, cfg.internal_rate, channels=codec.CHANNELS, rng=rng)
            if cfg.mains_amplitude > 0 else None
        )

    def next_frame(self) -> bytes:
        block = self.source.next_block(self.oversample)
        if self._hum is not None:
            block = self._hum.process(block)
        if self._bandpass is not None:
            block = self._bandpass.process(block)
        raws = adc_quantize(block[0], self.cfg.adc)
        return codec.pack_frame([codec.encode_window(int(r)) for r in raws])


@dataclass
class DeviceRunStats:
    frames_sent: int = 0
    bytes_sent: int = 0
    elapsed_s: float = 0.0
    error: str | None = None

    def summary(self) -> str:
        rate = self.bytes_sent / self.elapsed_s if self.elapsed_s > 0 else 0.0
        line = (
            f"frames={self.frames_sent} bytes={self.bytes_sent} "
            f"elapsed={self.elapsed_s:.3f}s byte_rate={rate:.0f}B/s"
        )
        if self.error:
            line += f" error={self.error}"
        return line


def run_device(cfg: DeviceConfig, source_spec, duration_s: float, *,
               seed: int | None = None, transport=None, clock=None) -> DeviceRunStats:
    """Stream encoded frames for duration_s, one per sample period.

    A transport failure mid-run shuts down cleanly and reports the frame
    count reached; a refused connection raises TransportError up front.
    """
    rng = np.random.default_rng(seed)
    source = (
        source_spec if hasattr(source_spec, "next_block")
        else make_source(source_spec, cfg.internal_rate, rng)
    )
    pipeline = EncodePipeline(cfg, source, rng)
    transport = transport if transport is not None else open_transport(cfg.transport)
    clock = clock if clock is not None else RealClock()

    stats = DeviceRunStats()
    n_frames = int(round(duration_s * cfg.sample_rate))
    start = clock.now()
    try:
        for n in range(n_frames):
            clock.sleep_until(start + n / cfg.sample_rate)
            frame = pipeline.next_frame()
            transport.send(frame)
            stats.frames_sent += 1
            stats.bytes_sent += len(frame)
    except TransportError as exc:
        stats.error = str(exc)
    finally:
        stats.elapsed_s = clock.now() - start
        transport.close()
    return stats
