"""Canonical pretty-printer; ``parse_contract(render_contract(c)) == c``."""
from __future__ import annotations

from .syntax import Atomic, Box, Contract, Deontic, Refinement

INDENT = "  "


def render_contract(contract: Contract) -> str:
    lines: list[str] = []
    if contract.unit is not None:
        lines.append(f"unit {contract.unit};")
    if contract.variables:
        lines.append("vars {")
        lines.extend(f"{INDENT}{name} = {value};" for name, value in contract.variables)
        lines.append("}")
    lines.append(f"contract {contract.name} {{")
    _clause(contract.root, 1, lines)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _clause(box: Box, depth: int, lines: list[str], prefix: str = "") -> None:
    pad = INDENT * depth
    head = f"{prefix}clause {box.name}"
    if box.agent is not None:
        head += f" agent {box.agent}"
    lines.append(f"{pad}{head} {{")
    inner = INDENT * (depth + 1)
    if not box.guard.is_empty:
        lines.append(f"{inner}when {box.guard};")
    if not box.trestr.is_empty:
        lines.append(f"{inner}within {box.trestr};")
    body = box.body
    if isinstance(body, Deontic):
        _tree(body.body, depth + 1, lines, f"{inner}{body.kind.value} ")
        if box.reparation is not None:
            _clause(box.reparation, depth + 1, lines, prefix="reparation ")
        lines[-1] += ";"
    else:
        _tree(body, depth + 1, lines, inner)
        if box.reparation is not None:
            # not valid input, printed for diagnostics only
            _clause(box.reparation, depth + 1, lines, prefix="reparation ")
    lines.append(f"{pad}}}")


def _tree(body, depth: int, lines: list[str], lead: str) -> None:
    if isinstance(body, Atomic):
        lines.append(f"{lead}act {body.action}")
        return
    assert isinstance(body, Refinement)
    lines.append(f"{lead}{body.kind.value} {{")
    for child in body.children:
        _clause(child, depth + 1, lines)
    lines.append(f"{INDENT * depth}}}")
