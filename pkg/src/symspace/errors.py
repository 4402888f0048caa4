"""Exception types shared across the library."""


class GeometryError(Exception):
    """Base class for all symspace errors."""


class DimensionError(GeometryError):
    """Inputs have incompatible or invalid dimensions."""


class NotASpaceFormError(GeometryError):
    """The generator does not square to a multiple of the identity."""


class ConditioningError(GeometryError):
    """A numerically defective eigenstructure or near-singular solve."""


class OffLevelSetError(GeometryError):
    """A representative does not satisfy the level-set constraint."""


class IntegrationFailureError(GeometryError):
    """Constraint drift during geodesic integration exceeded its budget."""


class SplitUndefinedError(GeometryError):
    """The curvature trace decomposition needs dimension at least 4."""


class StabilityError(GeometryError):
    """A tangent subspace is not stable under the Ricci endomorphism."""


class NotSymplecticError(GeometryError):
    """A subspace is degenerate for the symplectic form."""


class DivergenceError(GeometryError):
    """An integral over a noncompact region lacks a compact support bound."""


class SamplerError(GeometryError):
    """A random sampler failed to satisfy its contract."""


class ConfigError(GeometryError):
    """A run configuration failed to parse or validate."""
