"""Exception hierarchy shared across the package."""


class CVMDIError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CVMDIError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(CVMDIError, ValueError):
    """A parameter combination is inconsistent or degenerate."""


class DatasetError(CVMDIError, ValueError):
    """A quadrature dataset is malformed (length mismatch, too short)."""


class PhysicalityError(CVMDIError, ValueError):
    """A covariance matrix or attack violates quantum physicality."""


class NumericalDegeneracyError(CVMDIError, ArithmeticError):
    """A numerically degenerate intermediate exceeded tolerance."""
