"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): ``DomainError``
means the input violates a hypothesis of the requested operation, while
``NumericalFailure`` means the numerics could not deliver what theory
guarantees.
"""

from __future__ import annotations


class LipextError(Exception):
    """Base class for all package errors."""


class DomainError(LipextError, ValueError):
    """The input does not satisfy the operation's preconditions."""


class NumericalFailure(LipextError, ArithmeticError):
    """A solver failed on an instance that theory says is solvable."""


class ConstructionError(DomainError):
    """Malformed data passed to a constructor."""


class MissingTargetValue(DomainError, KeyError):
    """A tabulated target was queried at a point outside its table."""

    def __str__(self):
        return Exception.__str__(self)


class NotLipschitzInput(DomainError):
    def __init__(self, message, pair=None, ratio=None):
        super().__init__(message)
        self.pair = pair
        self.ratio = ratio


class NotMajorized(DomainError):
    def __init__(self, message, pair=None, ratio=None):
        super().__init__(message)
        self.pair = pair
        self.ratio = ratio


class NotPseudoLipschitz(DomainError):
    def __init__(self, message, pair=None, ratio=None):
        super().__init__(message)
        self.pair = pair
        self.ratio = ratio


class BudgetViolatedOnA(DomainError):
    """``sup |u - v|`` on the data set already exceeds the requested budget."""


class TargetNotAffineContraction(DomainError):
    """The affine target has operator norm above one."""


class OffGraphPoint(DomainError):
    """A point does not coincide with a node of the pseudo-metric grid."""


class NotAnExtension(DomainError):
    """A candidate extension disagrees with the original map on its domain."""


class NoDefect(DomainError):
    """The target is affine on the given triple, so no counterexample exists."""


class ModeInapplicable(DomainError):
    """The requested counterexample construction cannot meet its inequality."""


class DidNotConverge(NumericalFailure):
    def __init__(self, message, best_point=None, best_value=None):
        super().__init__(message)
        self.best_point = best_point
        self.best_value = best_value


class SolverInfeasible(NumericalFailure):
    """The solver declared infeasible a system that theory says is feasible."""
