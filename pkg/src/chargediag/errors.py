"""Exception taxonomy.

Two top-level families map onto the CLI exit codes: ``ValidationError``
(malformed or inconsistent input, exit 2) and ``NumericalError`` (a
well-formed computation that cannot produce a result, exit 3).
"""


class ChargeDiagError(Exception):
    """Base class for all package errors."""


class ValidationError(ChargeDiagError):
    """Input fails a structural precondition (shape, hermiticity, range)."""


class NumericalError(ChargeDiagError):
    """A numerical procedure failed or the problem is infeasible."""


class DimensionOverflow(ValidationError):
    """A tensor construction would exceed the dense-matrix entry budget."""


class NonInterior(NumericalError):
    """Dual iterates diverge: the charge target is not strictly interior."""


class MaxIterError(NonInterior):
    """Iteration budget exhausted without convergence.

    Subclasses NonInterior because in the strictly convex dual the only way
    to stall is a boundary/outside target driving ``beta`` to infinity.
    """


class EmptyAfterTrim(NumericalError):
    """Eigenvalue trimming discarded all mass (parameters too aggressive)."""


class NotEquivalent(NumericalError):
    """Two sequences disagree in per-copy charges/entropy beyond tolerance."""


class TrimFailure(NumericalError):
    """Trimming could not produce a usable factorization."""


class InfeasibleAtAnyR(NumericalError):
    """No bath rate makes the requested work transformation feasible."""


class NonPositiveR(ValidationError):
    """A bath rate that must be positive is zero or negative."""


class DegenerateNets(ValidationError):
    """Net sampling collapsed (all probe states on one side)."""
