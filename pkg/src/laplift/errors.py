"""Exception types shared across the package."""


class LapliftError(Exception):
    """Base class for errors raised by this package."""


class DegenerateSimplexError(LapliftError, ValueError):
    """A simplex is numerically degenerate (near-zero volume)."""


class OutOfRangeError(LapliftError, ValueError):
    """A point lies outside the triangulated label range."""


class DivergenceError(LapliftError, RuntimeError):
    """An iteration produced non-finite values."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(
            message or "non-finite values encountered at iteration %d" % iteration
        )


class PgmFormatError(LapliftError, ValueError):
    """A PGM file is malformed or uses an unsupported variant."""


class ConfigError(LapliftError, ValueError):
    """A run configuration is invalid."""
