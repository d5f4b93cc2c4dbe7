"""Exception hierarchy.

Every error carries the name of the module it originated in so the CLI can
surface it in its machine-readable error block.
"""

from __future__ import annotations


class RiskRegError(Exception):
    """Base class for all package errors."""

    module = "riskreg"
    exit_code = 1

    def __init__(self, message: str, *, module: str | None = None, hint: str | None = None):
        super().__init__(message)
        if module is not None:
            self.module = module
        self.hint = hint


class ValidationError(RiskRegError, ValueError):
    """Bad input: unknown columns, malformed outcome, invalid configuration."""

    exit_code = 2


class NumericalError(RiskRegError, ArithmeticError):
    """A numerical procedure failed (singular system, overflow, divergence)."""

    exit_code = 3


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap.

    ``result`` holds the last iterate when one is available.
    """

    def __init__(self, message: str, *, module: str | None = None, hint: str | None = None, result=None):
        super().__init__(message, module=module, hint=hint)
        self.result = result


class SingularMatrixError(NumericalError):
    pass
