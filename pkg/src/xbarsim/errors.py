"""Exception types shared across the simulator.

The CLI maps these onto process exit codes: invalid input -> 1,
numerical failure -> 2, settling timeout -> 3.
"""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(SimulationError, ValueError):
    """Malformed or out-of-contract input: bad config value, shape mismatch,
    out-of-range parameter."""


class ConfigError(InvalidInputError):
    """Config document rejected; carries the offending key path when known."""

    def __init__(self, message, key_path=None):
        super().__init__(message)
        self.key_path = key_path


class NumericalFailureError(SimulationError, RuntimeError):
    """Singular or indefinite system; carries the pivot location when known."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class SettlingTimeoutError(SimulationError, RuntimeError):
    """Transient failed to settle inside the allowed window; carries the worst
    relative deviation from the DC target."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
