"""
errors.py - Exception hierarchy shared by the library and the command line.

Two families:
- ConfigError: the caller asked for something that doesn't make sense
  (bad profile parameters, malformed run config). The CLI exits with 2.
- NumericalError: the inputs were fine but a computation could not be
  carried out to the requested accuracy. The CLI exits with 3.

Everything derives from FiberbandError so a front end can catch the lot.
"""

from typing import Optional


class FiberbandError(Exception):
    """Base class for every error raised by fiberband."""


class ConfigError(FiberbandError, ValueError):
    """
    Invalid configuration or constructor argument.

    Args:
        message: Human-readable description
        path: Dotted location of the offending field, e.g. "sweep.samples"
    """

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NumericalError(FiberbandError, ArithmeticError):
    """A computation failed or could not reach its tolerance."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge."""


class DomainError(NumericalError):
    """Evaluation outside the supported range (grid hull, range of a, ...)."""


class UnboundedRegionError(NumericalError):
    """The classically allowed region {V <= E} is not bounded."""


class ConvergenceError(NumericalError):
    """An iterative method (inverse iteration, Newton, ODE solve) stalled."""


class NotEmbeddedError(NumericalError):
    """The energy lies below the essential threshold; nothing to scatter."""


class L1CheckError(NumericalError):
    """The tail potential is not integrable to the requested tolerance."""


class InsufficientRangeError(NumericalError):
    """A fit was requested over too small a dynamic range."""
