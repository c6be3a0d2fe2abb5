"""Exception types raised across the package."""


class InvalidConfig(ValueError):
    """A configuration value violates its documented bounds."""


class SingularInput(ValueError):
    """A model function was evaluated where it is not finite."""


class ShapeMismatch(ValueError):
    """Vectors or matrices do not live on the same basis."""


class ResourceLimit(RuntimeError):
    """The requested Fock basis exceeds the configured dimension cap."""

    def __init__(self, dimension, cap):
        super().__init__(f"basis dimension {dimension} exceeds cap {cap}")
        self.dimension = dimension
        self.cap = cap


class NoConvergence(RuntimeError):
    """An adaptive quadrature could not reach its tolerance."""


class SeriesDivergent(RuntimeError):
    """A Neumann series was requested with a generator of norm >= 1."""

    def __init__(self, message, norm=None):
        super().__init__(message)
        self.norm = norm


class DegenerateNumerics(RuntimeError):
    """A spectral gap is too small to be resolved."""


class SingularSolve(RuntimeError):
    """A shifted operator is singular (shift lies in the spectrum)."""
