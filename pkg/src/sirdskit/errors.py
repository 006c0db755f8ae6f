"""Exception types shared across the toolkit."""


class SirdsError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(SirdsError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateInputError(SirdsError, ValueError):
    """Input is structurally valid but carries no usable signal."""


class GeometryError(SirdsError, ValueError):
    """Viewing geometry produces out-of-range separations."""


class DataError(SirdsError, ValueError):
    """Persisted data is inconsistent, duplicated, or unreadable."""
