"""Exception taxonomy shared across the package.

DomainError marks a violated mathematical precondition (dimension out of
range, divergent moment request, bad input file): the request is outside the
contract and retrying cannot help.  NumericalError marks a computation that
was attempted but did not reach its accuracy contract (quadrature budget
exhausted, near-singular linear system, ill-conditioned fit).  The CLI maps
them to exit codes 1 and 2 respectively.
"""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class NumericalError(RuntimeError):
    """A numerical routine ran but failed its accuracy/convergence contract."""
