"""Exception hierarchy used across the package."""


class SbolabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SbolabError):
    """Parameters lie outside the validity region of an operation."""


class PoleError(SbolabError):
    """A Gamma factor was evaluated at a non-positive integer.

    Attributes
    ----------
    arguments : list
        The offending Gamma arguments.
    order : int
        Pole order (always 1 for Gamma).
    """

    def __init__(self, message, arguments=None, order=1):
        super().__init__(message)
        self.arguments = list(arguments) if arguments is not None else []
        self.order = order


class OutsideCellError(SbolabError):
    """A section without a zero-extension was evaluated off the open cell."""


class QuadratureError(SbolabError):
    """Numerical integration failed to converge.

    The best available estimate and its error bound ride along so callers
    can still inspect what happened.
    """

    def __init__(self, message, estimate=None, err_estimate=None):
        super().__init__(message)
        self.estimate = estimate
        self.err_estimate = err_estimate


class TailError(SbolabError):
    """A truncated line integral could not certify its tail."""

    def __init__(self, message, suggested_t_max=None):
        super().__init__(message)
        self.suggested_t_max = suggested_t_max


class ConfigError(SbolabError):
    """Malformed run configuration (unknown key, bad value, ...)."""
