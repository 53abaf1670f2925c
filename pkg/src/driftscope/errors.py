"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: config errors -> 2, backend/protocol
errors -> 3, data errors -> 4.
"""


class DriftscopeError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DriftscopeError):
    """Invalid or incomplete run configuration."""


class DataError(DriftscopeError):
    """Missing, malformed, or inconsistent input data."""


class ProtocolError(DriftscopeError):
    """A substituter backend violated the wire protocol."""


class BackendError(DriftscopeError):
    """A substituter backend is unreachable or died outside the protocol."""
