"""Exception types shared across the package."""


class BoundsimError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(BoundsimError):
    """Invalid or inconsistent configuration."""


class GenerationError(BoundsimError):
    """Network generation could not satisfy its target within its cap."""


class DegeneracyError(BoundsimError):
    """Geometric degeneracy (coincident points, overlapping or concurrent
    segments) that the planarization refuses to resolve silently."""


class EmbeddingError(BoundsimError):
    """A distance matrix could not be embedded."""


class EvaluationError(BoundsimError):
    """Ground truth and classification disagree on the node universe."""
