"""Well-formedness rules for contracts.

Findings are plain data; :func:`raise_for_findings` turns them into an
exception for callers that want one.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .. import errors
from .syntax import Atomic, Box, Contract, Deontic, DeonticKind, Refinement

DUPLICATE_NAME = "DUPLICATE_NAME"
MISSING_DEONTIC = "MISSING_DEONTIC"
NESTED_DEONTIC = "NESTED_DEONTIC"
AGENT_MISSING = "AGENT_MISSING"
AGENT_PLACEMENT = "AGENT_PLACEMENT"
DECORATED_ACTION_BOX = "DECORATED_ACTION_BOX"
REPARATION_ON_PERMISSION = "REPARATION_ON_PERMISSION"
REPARATION_PLACEMENT = "REPARATION_PLACEMENT"
REFINEMENT_ARITY = "REFINEMENT_ARITY"
UNDECLARED_VARIABLE = "UNDECLARED_VARIABLE"
UNKNOWN_CLAUSE_REFERENCE = "UNKNOWN_CLAUSE_REFERENCE"

RULES = (
    DUPLICATE_NAME,
    MISSING_DEONTIC,
    NESTED_DEONTIC,
    AGENT_MISSING,
    AGENT_PLACEMENT,
    DECORATED_ACTION_BOX,
    REPARATION_ON_PERMISSION,
    REPARATION_PLACEMENT,
    REFINEMENT_ARITY,
    UNDECLARED_VARIABLE,
    UNKNOWN_CLAUSE_REFERENCE,
)


@dataclass(frozen=True)
class Finding:
    rule: str
    clause: str
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.rule}({self.clause})"
        return f"{text}: {self.detail}" if self.detail else text


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings

    def rules(self) -> set[str]:
        return {f.rule for f in self.findings}

    def __iter__(self):
        return iter(self.findings)

    def __len__(self) -> int:
        return len(self.findings)


def validate(contract: Contract) -> ValidationReport:
    out: list[Finding] = []
    boxes = list(contract.boxes())
    names = Counter(b.name for b in boxes)
    for name, count in names.items():
        if count > 1:
            out.append(Finding(DUPLICATE_NAME, name, f"used by {count} clauses"))

    _check_box(contract.root, out)

    declared = set(dict(contract.variables))
    for box in boxes:
        for var in sorted(box.guard.variables() - declared):
            out.append(Finding(UNDECLARED_VARIABLE, box.name, f"variable {var!r} is not declared"))
        for ref in sorted(box.trestr.references()):
            if ref not in names:
                out.append(Finding(UNKNOWN_CLAUSE_REFERENCE, box.name, f"after({ref}) names no clause"))
            elif ref == box.name:
                out.append(Finding(UNKNOWN_CLAUSE_REFERENCE, box.name, "clause refers to its own clock"))
            elif ref in _action_level_names(contract):
                out.append(
                    Finding(UNKNOWN_CLAUSE_REFERENCE, box.name, f"after({ref}) names an action box")
                )
    return ValidationReport(tuple(out))


def _action_level_names(contract: Contract) -> set[str]:
    names: set[str] = set()

    def visit(box: Box, below: bool) -> None:
        if below:
            names.add(box.name)
        body = box.body
        now_below = below or isinstance(body, Deontic)
        if isinstance(body, Deontic):
            body = body.body
        if isinstance(body, Refinement):
            for child in body.children:
                visit(child, now_below)
        if box.reparation is not None:
            visit(box.reparation, False)

    visit(contract.root, False)
    return names


def _check_box(box: Box, out: list[Finding], under: DeonticKind | None = None) -> None:
    """Check ``box``; ``under`` is the enclosing deontic operator, if any."""
    body = box.body
    if under is not None:
        decorations = [
            label
            for label, present in (
                ("guard", not box.guard.is_empty),
                ("time restriction", not box.trestr.is_empty),
                ("agent", box.agent is not None),
                ("reparation", box.reparation is not None),
            )
            if present
        ]
        if decorations:
            out.append(
                Finding(DECORATED_ACTION_BOX, box.name, "below a norm: " + ", ".join(decorations))
            )
        if isinstance(body, Deontic):
            out.append(Finding(NESTED_DEONTIC, box.name, "norm applied over another norm"))
            body = body.body
        if isinstance(body, Refinement):
            _check_arity(box, body, out)
            for child in body.children:
                _check_box(child, out, under)
        return

    if isinstance(body, Deontic):
        if box.agent is None:
            out.append(Finding(AGENT_MISSING, box.name, "a norm needs an agent"))
        if box.reparation is not None and body.kind is DeonticKind.PERMISSION:
            out.append(Finding(REPARATION_ON_PERMISSION, box.name, "permissions take no reparation"))
        inner = body.body
        if isinstance(inner, Refinement):
            _check_arity(box, inner, out)
            for child in inner.children:
                _check_box(child, out, body.kind)
        if box.reparation is not None:
            _check_box(box.reparation, out)
        return

    if box.agent is not None:
        out.append(Finding(AGENT_PLACEMENT, box.name, "agent on a clause without a norm"))
    if box.reparation is not None:
        out.append(Finding(REPARATION_PLACEMENT, box.name, "reparation on a clause without a norm"))
        _check_box(box.reparation, out)
    if isinstance(body, Atomic):
        out.append(Finding(MISSING_DEONTIC, box.name, f"action {body.action!r} has no norm applied"))
    elif isinstance(body, Refinement):
        _check_arity(box, body, out)
        for child in body.children:
            _check_box(child, out)


def _check_arity(box: Box, ref: Refinement, out: list[Finding]) -> None:
    if len(ref.children) < 2:
        out.append(Finding(REFINEMENT_ARITY, box.name, f"'{ref.kind.value}' with {len(ref.children)} part(s)"))


_EXCEPTION_FOR = {
    DUPLICATE_NAME: errors.DuplicateName,
    UNDECLARED_VARIABLE: errors.UndeclaredVariable,
    UNKNOWN_CLAUSE_REFERENCE: errors.UnknownClauseReference,
}


def raise_for_findings(report: ValidationReport) -> None:
    if report.ok:
        return
    kinds = {f.rule for f in report.findings}
    cls = errors.ValidationError
    if len(kinds) == 1:
        cls = _EXCEPTION_FOR.get(kinds.pop(), errors.ValidationError)
    raise cls(report.findings)
