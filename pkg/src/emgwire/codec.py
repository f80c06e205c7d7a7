"""Wire protocol: 24-bit samples -> 10-bit window codes -> 11-byte frames.

Each of the 8 channels is reduced from a 24-bit two's-complement ADC
conversion to a 10-bit code (1 sign bit + 9 magnitude bits) by selecting a
fixed window of the magnitude: one code step weighs 64 ADC counts.  A frame
carries one sample of all eight channels:

    byte 0..7   LSP, one per channel: low 8 bits of the 9-bit magnitude
    byte 8      MSP1: top two bits [sign, m8] of channels 1..4,
                channel 1 in bits 7-6 ... channel 4 in bits 1-0
    byte 9      MSP2: same layout for channels 5..8
    byte 10     end-of-message marker 0xFF

There is no escaping, so data bytes may legitimately equal 0xFF; the stream
synchronizer therefore scores marker candidates statistically instead of
trusting a single byte.

With UART overhead (1 start + 8 data + 1 stop bit per byte) a frame costs
110 bits on the wire, so a 115200 bps link carries ~1047 frames/s, enough
headroom above the 1000 SPS conversion rate.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, NamedTuple, Optional

from .errors import BadMarker

CHANNELS = 8
FRAME_LEN = 11
MARKER = 0xFF
MAGNITUDE_MAX = 511

# Window placement: code LSB weighs 2**WINDOW_SHIFT ADC counts.
WINDOW_SHIFT = 6
WINDOW_LSB_COUNTS = 1 << WINDOW_SHIFT

RAW24_MIN = -(1 << 23)
RAW24_MAX = (1 << 23) - 1

# UART framing: start + 8 data + stop.
BITS_PER_UART_BYTE = 10

SYNC_LOCK_HITS = 3


class WindowCode(NamedTuple):
    """10-bit protocol word: sign (1 = positive, 0 = negative) + 9-bit magnitude."""

    sign: int
    magnitude: int

    @property
    def value(self) -> int:
        """Signed integer in [-511, 511]."""
        return self.magnitude if self.sign else -self.magnitude


def encode_window(raw: int) -> WindowCode:
    """Reduce a 24-bit two's-complement sample to its window code.

    The magnitude is truncated toward zero (low 6 bits dropped) and
    saturates at 511; zero is canonically positive.
    """
    if not RAW24_MIN <= raw <= RAW24_MAX:
        raise ValueError(f"raw sample {raw} outside 24-bit range")
    if raw >= 0:
        return WindowCode(1, min(raw >> WINDOW_SHIFT, MAGNITUDE_MAX))
    return WindowCode(0, min((-raw) >> WINDOW_SHIFT, MAGNITUDE_MAX))


def decode_window(code: WindowCode) -> int:
    """Signed window value; accepts the non-canonical (0, 0) as zero."""
    sign, magnitude = code
    if sign not in (0, 1) or not 0 <= magnitude <= MAGNITUDE_MAX:
        raise ValueError(f"invalid window code {code!r}")
    return magnitude if sign else -magnitude


def pack_frame(codes: Iterable[WindowCode]) -> bytes:
    """Assemble one 11-byte frame from 8 window codes (channels 1..8)."""
    codes = list(codes)
    if len(codes) != CHANNELS:
        raise ValueError(f"expected {CHANNELS} window codes, got {len(codes)}")
    frame = bytearray(FRAME_LEN)
    msp = [0, 0]
    for i, (sign, magnitude) in enumerate(codes):
        if sign not in (0, 1) or not 0 <= magnitude <= MAGNITUDE_MAX:
            raise ValueError(f"invalid window code {codes[i]!r} for channel {i + 1}")
        frame[i] = magnitude & 0xFF
        pair = (sign << 1) | (magnitude >> 8)
        msp[i // 4] |= pair << (6 - 2 * (i % 4))
    frame[8], frame[9] = msp
    frame[10] = MARKER
    return bytes(frame)


def unpack_frame(frame: bytes) -> tuple[WindowCode, ...]:
    """Exact inverse of pack_frame.

    Raises BadMarker if byte 10 is not 0xFF -- the caller must treat the
    stream as desynchronized.
    """
    if len(frame) != FRAME_LEN:
        raise ValueError(f"frame must be {FRAME_LEN} bytes, got {len(frame)}")
    if frame[10] != MARKER:
        raise BadMarker(f"end marker 0x{frame[10]:02X} != 0x{MARKER:02X}")
    codes = []
    for i in range(CHANNELS):
        pair = (frame[8 + i // 4] >> (6 - 2 * (i % 4))) & 0b11
        codes.append(WindowCode(pair >> 1, ((pair & 1) << 8) | frame[i]))
    return tuple(codes)


class FrameSync:
    """Recovers 11-byte frame boundaries from an unaligned byte stream.

    While unaligned, every incoming byte is scored against the phase offset
    (byte position mod 11) whose marker slot it occupies: an 0xFF byte
    increments that offset's run of consecutive hits, anything else resets
    it.  The first offset to reach SYNC_LOCK_HITS locks, and the frame that
    ends on the locking marker is emitted immediately.  Scoring is
    byte-at-a-time, so at most one offset can newly qualify per byte; the
    lowest offset wins any residual tie.

    Once locked, one frame is emitted per 11 bytes; a bad marker at the
    locked offset unlocks the stream and restarts scoring.  Desync is
    state, not failure: push never raises.
    """

    def __init__(self) -> None:
        self.scores = [0] * FRAME_LEN
        self.aligned = False
        self.locked_offset: Optional[int] = None
        self.frames_emitted = 0
        self.sync_losses = 0
        self._pos = 0  # total bytes consumed, fixes each offset's phase
        self._tail: deque[int] = deque(maxlen=FRAME_LEN)  # search-mode window
        self._pending = bytearray()  # partial frame while locked

    def push(self, byte: int) -> Optional[bytes]:
        """Consume one byte; returns a completed frame or None."""
        pos = self._pos
        self._pos += 1
        if self.aligned:
            self._pending.append(byte)
            if len(self._pending) < FRAME_LEN:
                return None
            frame = bytes(self._pending)
            self._pending.clear()
            if frame[10] == MARKER:
                self.frames_emitted += 1
                return frame
            self._unlock()
            return None

        self._tail.append(byte)
        offset = (pos + 1) % FRAME_LEN  # frame-start offset this marker slot implies
        if byte != MARKER:
            self.scores[offset] = 0
            return None
        self.scores[offset] += 1
        if self.scores[offset] < SYNC_LOCK_HITS or len(self._tail) < FRAME_LEN:
            return None
        self.aligned = True
        self.locked_offset = offset
        self.scores = [0] * FRAME_LEN
        frame = bytes(self._tail)
        self._tail.clear()
        self.frames_emitted += 1
        return frame

    def feed(self, data: bytes) -> list[bytes]:
        """Consume a chunk, returning all frames completed by it."""
        frames = []
        for byte in data:
            frame = self.push(byte)
            if frame is not None:
                frames.append(frame)
        return frames

    def _unlock(self) -> None:
        self.aligned = False
        self.locked_offset = None
        self.sync_losses += 1
        self.scores = [0] * FRAME_LEN
        self._tail.clear()


def frame_bits(n_bytes: int) -> int:
    """Wire cost of n_bytes over UART (start + 8 data + stop per byte)."""
    if n_bytes <= 0:
        raise ValueError("byte count must be positive")
    return n_bytes * BITS_PER_UART_BYTE


def throughput(baud: float, frame_bits: float) -> float:
    """Frames deliverable per second at the given baud rate."""
    if baud <= 0 or frame_bits <= 0:
        raise ValueError("baud and frame_bits must be positive")
    return baud / frame_bits
