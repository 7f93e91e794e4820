"""Exception hierarchy and source locations shared across the toolchain."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """Location of a token or construct in an input file (1-based)."""

    file: str
    line: int
    column: int
    length: int = 1

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError("line/column must be >= 1")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class CpmtError(Exception):
    """Base class for all toolchain errors."""


class InputError(CpmtError):
    """A problem in user input (syntax, sorts, unknown names).

    Carries an optional SourceSpan so the CLI can print file:line:col.
    """

    def __init__(self, message: str, span: SourceSpan | None = None):
        super().__init__(message)
        self.span = span

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{self.span}: {msg}" if self.span else msg


class SortMismatchError(InputError):
    pass


class EvalError(CpmtError):
    """Formula evaluation failed (unbound symbol, sort mismatch, division by zero)."""


class GroundingError(CpmtError):
    pass


class NotTightError(GroundingError):
    """The program has a positive dependency cycle; carries a witness cycle."""

    def __init__(self, cycle: list):
        super().__init__("program is not tight; cycle: " + " -> ".join(map(str, cycle)))
        self.cycle = cycle


class CompletionError(CpmtError):
    pass


class TranslationError(CpmtError):
    pass


class EmitError(CpmtError):
    pass


class LinearGateError(CpmtError):
    """The description leaves the linear-convex fragment the native planner handles."""


class PlanningError(CpmtError):
    pass


class ValidationInputError(CpmtError):
    pass


class UsageError(CpmtError):
    """Bad command line or run configuration (exit code 2)."""
