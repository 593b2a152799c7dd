"""Exception and warning types shared across the package.

The hierarchy separates three failure modes that callers handle
differently:

* ``DomainError``     -- an argument is outside the mathematical domain
                         of the operation (a probability outside (0,1),
                         a point outside the support, p < 1, ...).
* ``ContractError``   -- structurally inconsistent inputs (mismatched
                         mixture weights, a non-convex rate function
                         where convexity is required, malformed specs).
* ``NumericError``    -- an internal numeric routine failed to converge
                         (root bracketing, unstable time stepping).

``DegenerateInputError`` marks inputs that are formally valid but carry
no information (an all-zero density sample).

``UnreliableResultWarning`` is issued when a value is returned but its
accuracy guarantee is weakened (masked Fisher mass, non-convergent
extrapolation, optimizer stall).  The command line front end maps any
such warning to exit status 2.
"""


class IsoLabError(Exception):
    """Base class for all package errors."""


class DomainError(IsoLabError, ValueError):
    """Argument outside the mathematical domain of the operation."""


class ContractError(IsoLabError, ValueError):
    """Inputs violate a structural precondition of the operation."""


class NumericError(IsoLabError, ArithmeticError):
    """An iterative numeric routine failed; details in the message."""


class DegenerateInputError(IsoLabError, ValueError):
    """Input is formally valid but degenerate (e.g. all-zero density)."""


class UnreliableResultWarning(UserWarning):
    """A value was computed but its accuracy guarantee is weakened."""
