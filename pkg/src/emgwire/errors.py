"""Exception types shared across the package."""


class EmgWireError(Exception):
    """Base class for all emgwire errors."""


class BadMarker(EmgWireError):
    """Frame end marker missing where the locked alignment expects it.

    Signals desynchronization: the caller must re-enter the sync search.
    """


class ConfigError(EmgWireError):
    """Invalid or inconsistent configuration (rates, cutoffs, link budget)."""


class FormatError(EmgWireError):
    """Replay/recording file content is not in the expected format."""


class TransportError(EmgWireError):
    """Byte transport could not be established or was lost mid-stream."""


class SyncLost(EmgWireError):
    """Stream stayed unsynchronized for longer than the allowed window."""
