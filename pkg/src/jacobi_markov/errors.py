"""Exception hierarchy shared by every module."""


class JacobiMarkovError(Exception):
    """Base class for all library errors."""


class ParameterDomainError(JacobiMarkovError, ValueError):
    """A parameter lies outside the regime where the object is defined."""


class UsageError(JacobiMarkovError, ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class SingularInputError(JacobiMarkovError, ValueError):
    """The formula is singular at the requested point."""


class ResourceError(JacobiMarkovError, RuntimeError):
    """A configured size cap would be exceeded."""


class NumericalError(JacobiMarkovError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""
