"""
Exceptions raised by fraclap. Every library failure derives from FracLapError.
"""


class FracLapError(Exception):
    """Raised when a fraclap computation cannot proceed."""

    pass


class DomainError(FracLapError):
    """Raised for invalid domains, cones or coverings."""

    pass


class DescriptorError(FracLapError):
    """Raised when a closed-form descriptor is unknown, malformed or not evaluable."""

    pass


class GridAlignmentError(FracLapError):
    """Raised when a translation is not an integer multiple of the grid spacing."""

    pass


class OutOfRangeError(FracLapError):
    """Raised when a parameter lies outside its supported range."""

    pass


class QuadratureError(FracLapError):
    """Raised when quadrature misses its tolerance or budget."""

    pass


class SolverError(FracLapError):
    """Raised when a linear system is singular or not positive definite."""

    pass


class EstimationError(FracLapError):
    """Raised when a fit or norm lacks the rows or coverage it needs."""

    pass


class ConfigError(FracLapError):
    """Raised for malformed command-line values or experiment configuration."""

    pass
