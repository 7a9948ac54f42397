"""Computation errors raised by the certificate kernels.

Input problems live in :mod:`src.validators` (``ValidationError`` and its
subclasses). The classes here describe outcomes of a well-formed computation
that cannot produce the requested object: a resource bound was hit, the
answer to a yes/no question is "no", or a solver failed to converge. Each
class carries the exit code the command-line front end reports for it.
"""

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID_INPUT = 2
EXIT_NEGATIVE = 3
EXIT_RESOURCE = 4


class QcwError(Exception):
    """Base class for computation errors.

    Args:
        message: Human-readable description.
        details: Extra machine-readable context copied into JSON reports.
    """

    exit_code = EXIT_INTERNAL

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details or {}


# ============================================================================
# RESOURCE BOUNDS
# ============================================================================


class TooLarge(QcwError):
    """Raised when an exhaustive search would exceed its documented size bound."""

    exit_code = EXIT_RESOURCE


class NotConverged(QcwError):
    """Raised when an iterative solver stops without meeting its tolerances."""

    exit_code = EXIT_RESOURCE


# ============================================================================
# NEGATIVE ANSWERS
# ============================================================================


class Infeasible(QcwError):
    """Raised when a linear or semidefinite program has no feasible point."""

    exit_code = EXIT_NEGATIVE


class Unbounded(QcwError):
    """Raised when a linear program has an unbounded objective."""

    exit_code = EXIT_NEGATIVE


class NoIndeterministicVertices(QcwError):
    """Raised when a model polytope has only deterministic vertices."""

    exit_code = EXIT_NEGATIVE


class BetaNotBelowOne(QcwError):
    """Raised when a logical witness is requested with beta(H, q) >= 1."""

    exit_code = EXIT_NEGATIVE


class TrivialStructure(QcwError):
    """Raised when a joint measurability structure has no incompatible subset."""

    exit_code = EXIT_NEGATIVE


class NoTransition(QcwError):
    """Raised when a noise family is feasible (or infeasible) on the whole range."""

    exit_code = EXIT_NEGATIVE


class InconsistentEnvironment(QcwError):
    """Raised when an environment table is not a (logically consistent) process."""

    exit_code = EXIT_NEGATIVE


class InconsistentProcess(InconsistentEnvironment):
    """Raised when a Boolean process function fails the consistency scan."""


class NoGlobalPastViolated(QcwError):
    """Raised when some party of a process function has a global past."""

    exit_code = EXIT_NEGATIVE


class NonBasisInput(QcwError):
    """Raised when a discrimination input is not an element of the basis.

    The outcome distribution is available in ``details["distribution"]``.
    """

    exit_code = EXIT_NEGATIVE


class NotOrthogonal(QcwError):
    """Raised when rays that must be orthogonal are not."""

    exit_code = EXIT_NEGATIVE


class NotComplete(QcwError):
    """Raised when the projectors of a hyperedge do not sum to the identity."""

    exit_code = EXIT_NEGATIVE


class VerificationFailed(QcwError):
    """Raised when a constructed object fails its own post-verification."""

    exit_code = EXIT_NEGATIVE


class CorpusMissing(QcwError):
    """Raised when a corpus directory holds no case files."""

    exit_code = EXIT_INVALID_INPUT
