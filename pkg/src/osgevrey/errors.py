"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid parameters or configuration."""


class ShapeError(ValueError):
    """Grid function lengths do not match the grid."""


class DomainError(ValueError):
    """Argument outside the domain where a routine is defined."""


class ConsistencyError(ValueError):
    """Input data violates a required identity (carries the residual)."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NearSingularError(ArithmeticError):
    """Discrete system is numerically singular (carries sigma_min/sigma_max)."""

    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


class DegenerateCorrectorError(ArithmeticError):
    """Boundary-layer corrector normalisation constant is too small."""

    def __init__(self, message, J=None):
        super().__init__(message)
        self.J = J


class HypothesisViolation(ValueError):
    """A parameter point fails the hypotheses of the estimate being checked."""

    def __init__(self, clause):
        super().__init__(clause)
        self.clause = clause


class MethodError(ValueError):
    """Requested evaluation method is not valid for the arguments."""


class SchemaVersionError(ConfigError):
    """Report or config written with an incompatible schema version."""
