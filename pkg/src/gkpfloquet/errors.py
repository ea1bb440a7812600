"""Exception types raised by the numerical layers.

Argument/contract violations raise plain ``ValueError``; everything that can
only be detected while running numerics derives from :class:`NumericsError`
so callers (and the CLI) can map failures to distinct exit paths.
"""

__all__ = [
    "GkpFloquetError",
    "NumericsError",
    "IntegratorError",
    "TruncationError",
    "DecoderError",
    "SqueezingUndefinedError",
    "ConfigError",
]


class GkpFloquetError(Exception):
    """Base class for package-specific errors."""


class NumericsError(GkpFloquetError):
    """A numerical routine failed or produced an unusable result."""


class IntegratorError(NumericsError):
    """Propagator failed to converge. Carries step-count diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class TruncationError(NumericsError):
    """State leaked into the top of the Fock space, or a basis-function
    recurrence produced non-finite values."""


class DecoderError(NumericsError):
    """Decoded logical matrix violated positivity beyond tolerance."""


class SqueezingUndefinedError(NumericsError):
    """Stabilizer expectation outside (0, 1); the squeezing parameter has
    no meaningful value there."""


class ConfigError(GkpFloquetError):
    """Experiment configuration could not be parsed or validated."""
