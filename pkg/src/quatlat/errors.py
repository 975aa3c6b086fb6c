"""Exception types shared across the package."""


class QuatlatError(Exception):
    """Base class for package errors."""


class ConfigError(QuatlatError):
    """Invalid or inconsistent configuration."""


class CapShortfallError(QuatlatError):
    """Enumeration caps are too small for the requested computation.

    Raised instead of silently truncating a lattice sum.
    """


class BudgetExceededError(QuatlatError):
    """A search or quadrature budget would be (or was) exhausted."""


class DivergentIntegralError(QuatlatError):
    """An integral does not converge absolutely for the given input."""
