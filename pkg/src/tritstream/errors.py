"""Exception types shared across the package."""


class TritstreamError(Exception):
    """Base class for all codec errors."""


class FormatError(TritstreamError):
    """A container or stream header is malformed, truncated, or unsupported."""


class CorruptionError(TritstreamError):
    """Decoder state broke an internal invariant; payload bytes do not match the model."""
