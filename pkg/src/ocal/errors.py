"""Exceptions raised by the toolkit.

Every error derives from ``ValueError`` so callers that only guard against
invalid input keep working.
"""

from __future__ import annotations


class OcalError(ValueError):
    """Base class for all toolkit errors."""


class ParseError(OcalError):
    """A dataset file could not be parsed."""

    def __init__(self, message: str, line: int | None = None) -> None:
        """Store the offending line number (1-based, header is line 1)."""
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class InfeasibleScenarioError(OcalError):
    """A combination of pool, split, learner and query strategy cannot run."""

    def __init__(self, reason: str) -> None:
        """Keep the reason so grid expansion can log it."""
        self.reason = reason
        super().__init__(f"Infeasible scenario: {reason}")


class SolverError(OcalError):
    """The dual solver did not reach the requested KKT tolerance."""

    def __init__(self, message: str, kkt_violation: float, iterations: int) -> None:
        """Attach the final violation and the number of working-set steps."""
        self.kkt_violation = kkt_violation
        self.iterations = iterations
        super().__init__(
            f"{message} (KKT violation {kkt_violation:.3e} after {iterations} steps)"
        )


class UnsupportedHeuristicError(OcalError):
    """A registered hyperparameter heuristic has no implementation."""


class PoolExhaustedError(OcalError):
    """No eligible unlabeled observation is left to query."""


class EmptyCurveError(OcalError):
    """A progress curve without records was summarized."""
