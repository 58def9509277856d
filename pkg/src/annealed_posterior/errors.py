"""Exception types shared across the package."""


class SamplerError(Exception):
    """Base class for errors raised by this package."""


class RejectedInputError(SamplerError, ValueError):
    """Input has the wrong shape, is non-finite, or violates a precondition."""


class UnsupportedSmoothingError(SamplerError):
    """The prior has no closed-form Gaussian convolution."""


class ScheduleExplosionError(SamplerError):
    """Schedule construction did not reach the target noise level within the rung cap."""


class DivergenceError(SamplerError):
    """A Langevin chain left the finite region or exceeded the norm guard."""

    def __init__(self, message, rung=None):
        if rung is not None:
            message = f"rung {rung}: {message}"
        super().__init__(message)
        self.rung = rung


class ConfigError(SamplerError, ValueError):
    """A configuration file or experiment parameter block is invalid."""
