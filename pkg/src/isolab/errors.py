"""Shared exception types.

Every isolab error derives from ``IsolabError`` so callers can catch the
whole family at once; the subclasses mirror the failure vocabulary used
throughout the package (bad coordinates, bad construction parameters,
non-finite evaluations, singular integrands, unmet preconditions, and
parameter regimes where a guarantee simply does not apply).
"""


class IsolabError(Exception):
    pass


class DomainError(IsolabError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ConstructionError(IsolabError, ValueError):
    """Object parameters fail a construction invariant."""


class EvaluationError(IsolabError, ArithmeticError):
    """A field or integrand produced a non-finite value."""


class SingularityError(IsolabError, ValueError):
    """An integrand or coefficient is singular at a supplied point."""


class PreconditionError(IsolabError, ValueError):
    """A documented precondition of the operation was not met."""


class RegimeError(DomainError):
    """Parameters fall outside the regime where the construction is defined."""
