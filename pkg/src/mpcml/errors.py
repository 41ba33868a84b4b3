"""Exception taxonomy shared across the package.

Each class maps to a distinct CLI exit code (see cli.py).
"""


class ConfigurationError(ValueError):
    """Invalid or inconsistent session / experiment configuration."""


class RangeOverflowError(ValueError):
    """A value does not fit the fixed-point range or the centered field range."""


class PreprocessingExhausted(RuntimeError):
    """A party ran out of dealer material of some kind."""


class ProtocolError(RuntimeError):
    """Round skew, malformed frames, material reuse, or other engine misuse."""


class SessionAbort(ProtocolError):
    """A peer aborted or disconnected; the session cannot continue."""


class MacCheckFailure(SessionAbort):
    """The batch MAC check detected tampering with an opened value."""


class ConnectionFailure(RuntimeError):
    """Session setup failed (timeout, unreachable peer, digest mismatch)."""
