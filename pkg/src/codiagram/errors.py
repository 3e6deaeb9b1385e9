"""Exception hierarchy shared by all pipeline stages."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    code: str
    message: str

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.line}:{self.col}: {self.code}: {self.message}"


class CodError(Exception):
    """Base class for every error raised by this package."""


class ContractSyntaxError(CodError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else None
        msg = first.format() if first else "syntax error"
        super().__init__(msg)


class ValidationError(CodError):
    """A parsed contract breaks one or more well-formedness rules."""

    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("; ".join(str(f) for f in self.findings) or "invalid contract")


class DuplicateName(ValidationError):
    pass


class UndeclaredVariable(ValidationError):
    pass


class UnknownClauseReference(ValidationError):
    pass


class TemporalError(CodError):
    pass


class ContradictoryRestriction(TemporalError):
    pass


class MixedClocks(TemporalError):
    pass


class UnsupportedConstraint(TemporalError):
    """Clock-difference constraints are parsed but cannot be normalized."""


class MissingVariable(TemporalError):
    pass


class EmptyGuard(TemporalError):
    pass


class CompileError(CodError):
    pass


class MissingAgent(CompileError):
    pass


class InvalidInterval(CompileError):
    pass


class ReparationOnPermission(CompileError):
    pass


class ModelError(CodError):
    """A network of automata is not well formed."""


class QuerySyntaxError(CodError):
    pass


class UnresolvedName(CodError):
    pass


class BudgetExceeded(CodError):
    def __init__(self, explored: int, budget: int):
        self.explored = explored
        self.budget = budget
        super().__init__(f"state budget {budget} exhausted after {explored} states")


class NameCollisionAfterSanitize(CodError):
    pass
