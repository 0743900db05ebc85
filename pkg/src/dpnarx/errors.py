"""Exception hierarchy shared by the identification pipeline."""

from __future__ import annotations


class DPNarxError(Exception):
    """Base class for all errors raised by this package."""

    #: process exit code used by the command-line front end
    exit_code = 1


class LayoutError(DPNarxError, ValueError):
    """Input data does not match the expected file or segment layout."""

    exit_code = 2


class NumericalError(DPNarxError, ArithmeticError):
    """A numerical stage failed (rank deficiency, non-convergence, ...)."""

    exit_code = 3


class RankDeficientError(NumericalError):
    """Regression matrix is numerically rank deficient."""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class MemoryBudgetError(NumericalError):
    """A requested computation would exceed the configured memory budget."""

    def __init__(self, message: str, elements: int, budget_bytes: int):
        super().__init__(message)
        self.elements = elements
        self.budget_bytes = budget_bytes


class ConvergenceError(NumericalError):
    """An iterative solver failed to converge."""


class UnstableSimulationError(DPNarxError):
    """Free-run simulation diverged."""

    exit_code = 4


class StageError(DPNarxError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
