"""Contract language: syntax tree, parser, printer and validator."""
from .parser import parse_contract, tokenize
from .render import render_contract
from .syntax import (
    Atomic,
    Box,
    ClockAtom,
    ClockRef,
    Contract,
    Deontic,
    DeonticKind,
    Guard,
    Refinement,
    RefinementKind,
    TimeRestriction,
    VarAtom,
)
from .rules import Finding, ValidationReport, validate

__all__ = [
    "Atomic",
    "Box",
    "ClockAtom",
    "ClockRef",
    "Contract",
    "Deontic",
    "DeonticKind",
    "Finding",
    "Guard",
    "Refinement",
    "RefinementKind",
    "TimeRestriction",
    "ValidationReport",
    "VarAtom",
    "parse_contract",
    "render_contract",
    "tokenize",
    "validate",
]
