"""Exception types shared across the package."""


class SbsolError(Exception):
    """Base class for all package-specific errors."""


class GridMismatch(SbsolError, ValueError):
    """A field (or tabulated potential) does not live on the expected grid."""


class InvalidPotential(SbsolError, ValueError):
    """A potential spec evaluates to a non-positive value on the interior."""


class NotProjectable(SbsolError):
    """The quartic form is non-positive, so no scaling reaches the constraint set.

    This is the signature of the subcritical regime (coupling at or below
    sqrt(mu1*mu2)) and of a collapsing iterate.
    """


class InitFailed(SbsolError):
    """No trial initializer produced a positive quartic form."""


class NoBoxConvergence(SbsolError):
    """Box doubling did not settle within the allowed number of doublings."""

    def __init__(self, message, sequence=()):
        super().__init__(message)
        self.sequence = tuple(sequence)


class TrivialState(SbsolError):
    """Peak analysis was asked to run on an identically zero component."""


class WindowTooSmall(SbsolError):
    """A decay fit window contains fewer than the minimum number of nodes."""


class OutOfDomain(SbsolError, ValueError):
    """A requested sample point lies outside the domain."""


class ConfigError(SbsolError, ValueError):
    """A run configuration file could not be parsed or validated."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SweepCapExceeded(SbsolError, ValueError):
    """A sweep enumerates more cells than the configured cap."""
