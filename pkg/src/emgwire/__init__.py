"""emgwire: software re-creation of an 8-channel wireless sEMG acquisition link."""

from .codec import (
    CHANNELS,
    FRAME_LEN,
    MARKER,
    FrameSync,
    WindowCode,
    decode_window,
    encode_window,
    frame_bits,
    pack_frame,
    throughput,
    unpack_frame,
)
from .errors import BadMarker, ConfigError, EmgWireError, FormatError, SyncLost, TransportError
from .signal_chain import (
    ADC_LSB_VOLTS,
    FULL_SCALE_VOLTS,
    WINDOW_STEP_VOLTS,
    AdcSpec,
    BandPass,
    BandPassSpec,
    Notch,
    NotchSpec,
    adc_quantize,
    code_to_volts,
    inject_mains,
)

__version__ = "0.1.0"

__all__ = [
    "ADC_LSB_VOLTS", "AdcSpec", "BadMarker", "BandPass", "BandPassSpec", "CHANNELS",
    "ConfigError", "EmgWireError", "FormatError", "FRAME_LEN", "FrameSync",
    "FULL_SCALE_VOLTS", "MARKER", "Notch", "NotchSpec", "SyncLost", "TransportError",
    "WINDOW_STEP_VOLTS", "WindowCode", "adc_quantize", "code_to_volts",
    "decode_window", "encode_window", "frame_bits", "inject_mains", "pack_frame",
    "throughput", "unpack_frame",
]
