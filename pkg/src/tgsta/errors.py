"""Exception types shared by the library and the command-line driver."""


class TGStaError(Exception):
    """Base class for all package errors."""


class ConfigError(TGStaError, ValueError):
    """Invalid physical or numerical parameters."""


class ConvergenceError(TGStaError, RuntimeError):
    """An iterative solver (bisection, imaginary time, quadrature) failed to converge."""


class MonitorTrip(TGStaError, RuntimeError):
    """A field leaked into the grid edges or into the top of the wavenumber band.

    Raised when the periodic spectral representation can no longer be
    trusted. ``diagnostic`` carries the offending fractions.
    """

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}
