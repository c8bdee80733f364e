"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A scenario or solver configuration failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class InstabilityError(RuntimeError):
    """Time integration blew past the instability guard."""


class RungFailureError(RuntimeError):
    """A resolvent continuation rung missed its residual tolerance.

    Carries the partially completed ladder in ``partial``.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class StepSizeCollapseError(RuntimeError):
    """The adaptive trajectory integrator could not advance."""
