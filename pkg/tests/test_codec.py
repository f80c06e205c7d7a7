"""Window encode/decode, frame packing and stream sync."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emgwire import codec
from emgwire.codec import FrameSync, WindowCode
from emgwire.errors import BadMarker


def window_oracle(raw: int) -> tuple[int, int]:
    """Bit-level reference: pick magnitude bits 14..6, saturate above."""
    sign = 1 if raw >= 0 else 0
    mag_abs = abs(raw)
    if mag_abs >> 15:
        return (sign, 511)
    mag = sum(((mag_abs >> i) & 1) << (i - 6) for i in range(6, 15))
    return (sign, mag)


valid_codes = st.tuples(st.integers(0, 1), st.integers(0, 511)).map(lambda t: WindowCode(*t))
code_tuples = st.tuples(*[valid_codes] * 8)
raw_samples = st.integers(codec.RAW24_MIN, codec.RAW24_MAX)


class TestEncodeWindow:
    def test_zero_is_canonical_positive(self):
        assert codec.encode_window(0) == WindowCode(1, 0)

    def test_one_window_step(self):
        # 64 ADC counts = one code step = 64 * 4.5/2^23 V = 34.33 uV
        assert codec.encode_window(64) == WindowCode(1, 1)

    def test_largest_in_window_negative(self):
        assert codec.encode_window(-32704) == WindowCode(0, 511)  # -511 * 64

    def test_positive_full_scale_saturates(self):
        assert abs(2**23 - 1) >> 6 > 511
        assert codec.encode_window(2**23 - 1) == WindowCode(1, 511)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            codec.encode_window(2**23)
        with pytest.raises(ValueError):
            codec.encode_window(-(2**23) - 1)

    @given(raw_samples)
    def test_matches_bit_oracle(self, raw):
        assert tuple(codec.encode_window(raw)) == window_oracle(raw)

    @given(raw_samples, raw_samples)
    def test_monotone(self, a, b):
        if a > b:
            a, b = b, a
        assert codec.decode_window(codec.encode_window(a)) <= \
            codec.decode_window(codec.encode_window(b))

    @given(raw_samples)
    def test_saturation(self, raw):
        if abs(raw) >= 511 * 64:
            assert codec.encode_window(raw).magnitude == 511


class TestDecodeWindow:
    def test_zero(self):
        assert codec.decode_window(WindowCode(1, 0)) == 0

    def test_sign_application(self):
        assert codec.decode_window(WindowCode(0, 511)) == -511

    def test_encode_then_decode(self):
        assert codec.encode_window(4096) == WindowCode(1, 64)
        assert codec.decode_window(codec.encode_window(4096)) == 4096 // 64

    def test_tolerant_negative_zero(self):
        assert codec.decode_window(WindowCode(0, 0)) == 0

    def test_invalid_code_rejected(self):
        with pytest.raises(ValueError):
            codec.decode_window(WindowCode(1, 512))

    @given(raw_samples)
    def test_truncation_toward_zero(self, raw):
        got = codec.decode_window(codec.encode_window(raw))
        expect = int(raw / 64)  # Python int() truncates toward zero
        expect = max(-511, min(511, expect))
        assert got == expect


class TestFrames:
    def test_canonical_zero_frame(self):
        frame = codec.pack_frame([WindowCode(1, 0)] * 8)
        assert frame == bytes([0] * 8 + [0xAA, 0xAA, 0xFF])

    def test_all_zero_bits_frame(self):
        frame = codec.pack_frame([WindowCode(0, 0)] * 8)
        assert frame == bytes([0] * 8 + [0x00, 0x00, 0xFF])

    def test_unpack_inverse_of_pack(self):
        assert codec.unpack_frame(bytes([0] * 8 + [0xAA, 0xAA, 0xFF])) == \
            tuple([WindowCode(1, 0)] * 8)

    def test_bad_marker(self):
        with pytest.raises(BadMarker):
            codec.unpack_frame(bytes([0] * 8 + [0x00, 0x00, 0xFE]))

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            codec.unpack_frame(bytes(10))

    def test_channel_placement(self):
        codes = [WindowCode(1, i) for i in range(8)]
        frame = codec.pack_frame(codes)
        assert list(frame[:8]) == list(range(8))  # LSP order = channel order

    def test_msp_bit_order(self):
        # channel 1 owns the top two bits of MSP1, channel 5 of MSP2
        codes = [WindowCode(0, 0)] * 8
        codes[0] = WindowCode(1, 256)
        frame = codec.pack_frame(codes)
        assert frame[8] == 0b11000000 and frame[9] == 0
        codes = [WindowCode(0, 0)] * 8
        codes[4] = WindowCode(1, 256)
        frame = codec.pack_frame(codes)
        assert frame[8] == 0 and frame[9] == 0b11000000

    @given(code_tuples)
    def test_roundtrip(self, codes):
        assert codec.unpack_frame(codec.pack_frame(codes)) == codes

    @given(code_tuples)
    def test_pack_of_unpack(self, codes):
        frame = codec.pack_frame(codes)
        assert codec.pack_frame(codec.unpack_frame(frame)) == frame


def make_stream(frames):
    return b"".join(frames)


def random_frames(n, rng, max_magnitude=511):
    frames = []
    for _ in range(n):
        frames.append(codec.pack_frame([
            WindowCode(rng.randint(0, 1), rng.randint(0, max_magnitude))
            for _ in range(8)
        ]))
    return frames


class TestFrameSync:
    def test_clean_stream_locks_on_third_marker(self):
        rng = random.Random(1)
        frames = random_frames(6, rng)
        sync = FrameSync()
        got = sync.feed(make_stream(frames))
        # first two frames are spent earning the lock
        assert got == frames[2:]
        assert sync.aligned and sync.locked_offset == 0
        assert sync.sync_losses == 0

    def test_lock_within_33_bytes(self):
        rng = random.Random(2)
        frames = random_frames(3, rng)
        sync = FrameSync()
        emitted_at = None
        for i, byte in enumerate(make_stream(frames)):
            if sync.push(byte) is not None:
                emitted_at = i
                break
        assert emitted_at is not None and emitted_at <= 32

    def test_garbage_prefix_same_frames(self):
        rng = random.Random(3)
        frames = random_frames(8, rng, max_magnitude=254)  # keep 0xFF out of data
        clean = FrameSync().feed(make_stream(frames))
        prefixed = FrameSync().feed(bytes([0x12, 0x34, 0x56, 0x78, 0x9A]) +
                                    make_stream(frames))
        assert prefixed == clean

    def test_all_ff_stream(self):
        sync = FrameSync()
        got = sync.feed(b"\xff" * 66)
        assert sync.aligned
        # every offset scores on all-0xFF input; the first to finish three
        # hits is offset 1, deterministically
        assert sync.locked_offset == 1
        for frame in got:
            assert codec.unpack_frame(frame) == tuple([WindowCode(1, 511)] * 8)

    def test_buffered_bytes_bounded(self):
        rng = random.Random(6)
        frames = random_frames(6, rng)
        stream = bytes([0xFF, 0x00, 0x13]) + make_stream(frames)
        sync = FrameSync()
        for byte in stream:
            sync.push(byte)
            assert len(sync._tail) + len(sync._pending) <= 2 * codec.FRAME_LEN

    def test_corrupted_marker_recovers(self):
        rng = random.Random(4)
        frames = random_frames(12, rng, max_magnitude=254)
        stream = bytearray(make_stream(frames))
        stream[5 * 11 + 10] = 0x00  # break frame 5's marker
        sync = FrameSync()
        got = sync.feed(bytes(stream))
        assert sync.sync_losses == 1
        # locked emission: frames 2..4, then relock costs frames 5..7
        assert got == frames[2:5] + frames[8:]

    def test_push_never_raises_on_garbage(self):
        sync = FrameSync()
        rng = random.Random(5)
        for _ in range(1000):
            sync.push(rng.randint(0, 255))

    @settings(max_examples=50)
    @given(st.binary(min_size=0, max_size=10), st.integers(0, 2**32 - 1))
    def test_prefix_independence(self, prefix, seed):
        """Lock within 4 frame lengths; afterwards frames match the clean run."""
        rng = random.Random(seed)
        frames = random_frames(8, rng, max_magnitude=254)
        stream = bytes(prefix) + make_stream(frames)
        sync = FrameSync()
        first_emit = None
        got = []
        for i, byte in enumerate(stream):
            frame = sync.push(byte)
            if frame is not None:
                if first_emit is None:
                    first_emit = i
                got.append(frame)
        assert first_emit is not None
        assert first_emit <= len(prefix) + 4 * codec.FRAME_LEN
        assert got == frames[-len(got):]
        assert len(got) >= len(frames) - 4


class TestThroughput:
    def test_24bit_frame_rate(self):
        assert codec.throughput(115200, 240) == 480.0

    def test_windowed_frame_rate(self):
        assert codec.throughput(115200, 110) == pytest.approx(1047.27, abs=0.01)

    def test_unit_rate(self):
        assert codec.throughput(115200, 115200) == 1.0

    def test_uart_overhead(self):
        assert codec.frame_bits(11) == 110
        assert codec.frame_bits(24) == 240  # eight raw 3-byte channels

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            codec.throughput(0, 110)
        with pytest.raises(ValueError):
            codec.throughput(115200, 0)
        with pytest.raises(ValueError):
            codec.frame_bits(0)
