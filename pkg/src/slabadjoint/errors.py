"""Exception types shared across the package."""


class SlabError(Exception):
    """Base class for errors raised by slabadjoint."""


class ParameterError(SlabError, ValueError):
    """Invalid model parameters (non-finite, non-positive, detector outside slab)."""


class DomainError(SlabError, ValueError):
    """Position outside the slab [-a, a]."""


class GridMismatchError(SlabError, ValueError):
    """Fields defined on different grids were combined."""


class OffGridError(SlabError, ValueError):
    """A point-evaluation or delta source position is not a grid node."""


class SingularSystemError(SlabError, ArithmeticError):
    """Zero pivot in the tridiagonal factorization."""


class ConfigError(SlabError, ValueError):
    """Run configuration could not be parsed or violates an invariant."""
