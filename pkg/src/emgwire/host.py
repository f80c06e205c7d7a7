"""Host side: byte stream -> frames -> volts, sessions, CSV recording.

The decoder keeps two parallel views of each decoded sample: the raw
window-grid voltages (what gets recorded, unless asked otherwise) and the
live view with the optional 60 Hz notch applied (what gets streamed to
observers).  With the notch off the live view is the same object, so the
pass-through adds no numeric change.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

from . import codec
from .errors import FormatError, SyncLost
from .signal_chain import FULL_SCALE_VOLTS, Notch, NotchSpec, code_to_volts

CSV_HEADER = ["t_s"] + [f"ch{i}_mV" for i in range(1, codec.CHANNELS + 1)]

# Abort if this much wall-equivalent stream passes without frame lock.
SYNC_LOSS_LIMIT_S = 1.0


@dataclass
class ChannelBlock:
    """One decoded 8-channel sample on the window-code voltage grid."""

    index: int
    t: float
    volts: np.ndarray

    @classmethod
    def from_codes(cls, index: int, sample_rate: float, codes) -> "ChannelBlock":
        values = np.array([codec.decode_window(c) for c in codes])
        return cls(index, index / sample_rate, code_to_volts(values))


@dataclass(frozen=True)
class SessionConfig:
    duration_s: float = 6.0
    notch_enabled: bool = False
    output_path: Optional[str] = None
    source: str = "tcp-listen:127.0.0.1:7240"
    sample_rate: int = 1000
    record_notched: bool = False
    notch: NotchSpec = field(default_factory=NotchSpec)

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")


class DecodePipeline:
    """Synchronizes, unpacks and converts an incoming byte stream.

    push_bytes returns (recorded, live) sample pairs; `recorded` is the
    pre-notch grid value unless record_notched was set.
    """

    def __init__(self, sample_rate: int = 1000, notch: NotchSpec = NotchSpec(),
                 notch_enabled: bool = False, record_notched: bool = False):
        self.sample_rate = sample_rate
        self.record_notched = record_notched
        self._sync = codec.FrameSync()
        self._notch = Notch(sample_rate, notch, codec.CHANNELS)
        self._notch_enabled = notch_enabled
        self._index = 0
        self._bytes_since_frame = 0

    @property
    def notch_enabled(self) -> bool:
        return self._notch_enabled

    def set_notch(self, on: bool) -> None:
        if on and not self._notch_enabled:
            self._notch.reset()
        self._notch_enabled = on

    @property
    def frames_received(self) -> int:
        return self._sync.frames_emitted

    @property
    def sync_losses(self) -> int:
        return self._sync.sync_losses

    def push_bytes(self, data: bytes) -> list[tuple[ChannelBlock, ChannelBlock]]:
        out = []
        for frame in self._sync.feed(data):
            raw = ChannelBlock.from_codes(self._index, self.sample_rate,
                                          codec.unpack_frame(frame))
            if self._notch_enabled:
                live = ChannelBlock(raw.index, raw.t,
                                    self._notch.process(raw.volts[None, :])[0])
            else:
                live = raw
            self._index += 1
            out.append((live if self.record_notched else raw, live))
        self._bytes_since_frame += len(data)
        if out:
            self._bytes_since_frame = 0
        elif self._bytes_since_frame > SYNC_LOSS_LIMIT_S * self.sample_rate * codec.FRAME_LEN:
            raise SyncLost(
                f"no frame lock within {self._bytes_since_frame} bytes"
            )
        return out


@dataclass
class SessionSummary:
    frames_received: int = 0
    sync_losses: int = 0
    duration_s: float = 0.0
    aborted: Optional[str] = None
    output_path: Optional[str] = None

    def as_text(self) -> str:
        lines = [
            f"frames received: {self.frames_received}",
            f"sync losses:     {self.sync_losses}",
            f"duration:        {self.duration_s:.3f} s",
        ]
        if self.aborted:
            lines.append(f"aborted:         {self.aborted} (partial recording)")
        if self.output_path:
            lines.append(f"recording:       {self.output_path}")
        return "\n".join(lines)


def run_session(cfg: SessionConfig, chunks: Iterator[bytes],
                stop=None) -> tuple[list[ChannelBlock], SessionSummary]:
    """Consume a byte-chunk iterator until the configured duration.

    `stop` is an optional callable polled between chunks (stop command).
    Returns the recorded blocks and a summary; the recording is written to
    cfg.output_path when set.  A sync outage longer than SYNC_LOSS_LIMIT_S
    aborts with the partial recording flagged in the summary.
    """
    pipeline = DecodePipeline(cfg.sample_rate, cfg.notch, cfg.notch_enabled,
                              cfg.record_notched)
    target = int(round(cfg.duration_s * cfg.sample_rate))
    recorded: list[ChannelBlock] = []
    summary = SessionSummary()
    try:
        for chunk in chunks:
            if stop is not None and stop():
                break
            for rec, _live in pipeline.push_bytes(chunk):
                if len(recorded) < target:
                    recorded.append(rec)
            if len(recorded) >= target:
                break
    except SyncLost as exc:
        summary.aborted = str(exc)
    summary.frames_received = pipeline.frames_received
    summary.sync_losses = pipeline.sync_losses
    summary.duration_s = len(recorded) / cfg.sample_rate
    if cfg.output_path and recorded:
        summary.output_path = record_csv(recorded, cfg.output_path)
    return recorded, summary


def record_csv(blocks: Iterable[ChannelBlock], path: str) -> str:
    """Write blocks as CSV: t_s, then the 8 channels in millivolts.

    Six decimal places in mV resolve far below half a window step, so the
    file round-trips exactly onto the code grid.
    """
    blocks = list(blocks)
    if not blocks:
        raise ValueError("nothing to record")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for b in blocks:
            writer.writerow([f"{b.t:.3f}"] + [f"{v * 1e3:.6f}" for v in b.volts])
    return path


def read_recording(path: str) -> list[ChannelBlock]:
    """Parse a record_csv file back into blocks (volts)."""
    blocks = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise FormatError(f"{path}: unexpected header {header!r}")
        for i, row in enumerate(reader):
            if len(row) != len(CSV_HEADER):
                raise FormatError(f"{path}: row {i + 2} has {len(row)} cells")
            t = float(row[0])
            volts = np.array([float(v) for v in row[1:]]) * 1e-3
            if np.any(np.abs(volts) > FULL_SCALE_VOLTS * (1 + 1e-9)):
                raise FormatError(f"{path}: row {i + 2} exceeds full scale")
            blocks.append(ChannelBlock(i, t, volts))
    return blocks


def blocks_to_array(blocks: Iterable[ChannelBlock]) -> np.ndarray:
    """Stack decoded samples into an (n, 8) volt array."""
    return np.array([b.volts for b in blocks])


def iter_socket_chunks(sock, chunk_size: int = 4096) -> Iterator[bytes]:
    """Yield chunks from a connected socket until it closes."""
    while True:
        try:
            data = sock.recv(chunk_size)
        except TimeoutError:
            yield b""
            continue
        except OSError:
            return
        if not data:
            return
        yield data


def iter_bytes(data: bytes, chunk_size: int = 4096) -> Iterator[bytes]:
    """Chunk an in-memory byte string (loopback streams)."""
    for i in range(0, len(data), chunk_size):
        yield data[i:i + chunk_size]
