"""Exception types shared across the package."""


class MirrorflowError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(MirrorflowError):
    """Experiment configuration is malformed or inconsistent."""


# -- graphs -----------------------------------------------------------------

class DisconnectedGraphError(MirrorflowError):
    """The communication graph has more than one component."""


class SelfLoopError(MirrorflowError):
    """An edge connects an agent to itself."""


class DuplicateEdgeError(MirrorflowError):
    """The same undirected edge appears twice."""


class EdgeIndexError(MirrorflowError):
    """An edge endpoint is outside the 1..n agent range."""


class InvalidParameterError(MirrorflowError):
    """A generator or operation parameter is out of range."""


class EigensolverError(MirrorflowError):
    """The dense eigenvalue routine failed to converge."""


# -- mirror maps ------------------------------------------------------------

class DomainViolationError(MirrorflowError):
    """A point lies outside the distance generator's domain."""


class NumericalOverflowError(MirrorflowError):
    """An exponent is large enough to overflow double precision."""


# -- objectives and data ----------------------------------------------------

class DimensionMismatchError(MirrorflowError):
    """Vector or matrix dimensions do not agree."""


class InsufficientDataError(MirrorflowError):
    """Fewer data rows than the requested partition needs."""


class RankDeficientError(MirrorflowError):
    """The stacked design matrix is rank deficient, so the global
    objective is not strongly convex."""


class DataFormatError(MirrorflowError):
    """An ingested data table cannot be parsed as a numeric matrix."""


# -- dynamics and stability -------------------------------------------------

class SingularHessianError(MirrorflowError):
    """A distance-generator Hessian is numerically singular (excluded
    by strong convexity; kept as a defensive check)."""


class AsymmetricInputError(MirrorflowError):
    """A matrix that must be symmetric is not."""


class SingularFactorError(MirrorflowError):
    """A determinant factor is singular, so the factored determinant
    identity cannot be evaluated."""


class InsufficientTailError(MirrorflowError):
    """The trajectory tail has too few usable samples for a rate fit."""
