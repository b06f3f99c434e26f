"""Exception hierarchy shared across the package.

Two families matter to callers: ``ValidationError`` means the *inputs* are
outside the contract (CLI exit code 1), ``OracleError`` means a numerical
procedure could not produce a trustworthy answer (CLI exit code 2).
"""


class GrayWynerError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(GrayWynerError, ValueError):
    """Inputs violate a documented precondition."""


class RhoOutOfRange(ValidationError):
    """Correlation must satisfy 0 <= rho < 1."""


class NonPSDCovariance(ValidationError):
    """A covariance matrix is not positive semidefinite."""


class BadPmf(ValidationError):
    """A pmf has negative entries or does not sum to one."""


class ZeroVariance(ValidationError):
    """A coordinate is almost surely constant; bounds are degenerate."""


class NonPositiveInput(ValidationError):
    """A quantity that must be strictly positive is zero or negative."""


class EmptyProfile(ValidationError):
    """A conditional-variance profile must contain at least one letter."""


class NegativeDelta(ValidationError):
    """Distortion budgets must be nonnegative."""


class DeltaNotBelowVariance(ValidationError):
    """Test channels require 0 < distortion < variance."""


class NuOutOfRange(ValidationError):
    """The dual variable must lie in (1/2, 1]."""


class RegimeViolation(ValidationError):
    """The requested operating point lies outside the formula's regime."""


class GridTooCoarse(ValidationError):
    """A brute-force grid step is too coarse to certify anything."""


class SeedRequired(ValidationError):
    """Randomized procedures demand an explicit seed for reproducibility."""


class OracleError(GrayWynerError, RuntimeError):
    """A numerical procedure failed to reach its advertised guarantee."""


class NotConverged(OracleError):
    """An iterative solver hit its iteration cap before its tolerance."""


class DeltaInfeasible(OracleError):
    """No point on the reproduction grid can reach the target distortion."""


class QuadratureNotConverged(OracleError):
    """Numerical integration could not meet the requested error budget."""


class NoFeasiblePointFound(OracleError):
    """No iterate of the frontier search satisfied the rate constraint."""
