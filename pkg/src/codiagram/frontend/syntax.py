"""Abstract syntax of C-O Diagram contracts.

A contract is a tree of boxes. Every box has a name; the remaining slots
(agent, guard, time restriction, reparation) are optional and the body is one
of an atomic action, a deontic norm over an action tree, or a refinement of
two or more sub-boxes.
"""
from __future__ import annotations

import enum
import operator
from dataclasses import dataclass, field
from typing import Iterator, Union

OPS = ("<=", "<", "==", ">", ">=")

_EVAL = {
    "<=": operator.le,
    "<": operator.lt,
    "==": operator.eq,
    ">": operator.gt,
    ">=": operator.ge,
}


def compare(lhs: int, op: str, rhs: int) -> bool:
    return _EVAL[op](lhs, rhs)


@dataclass(frozen=True)
class VarAtom:
    """``var ~ n`` or ``var - other ~ n`` over integer variables."""

    var: str
    op: str
    value: int
    other: str | None = None

    def variables(self) -> tuple[str, ...]:
        return (self.var,) if self.other is None else (self.var, self.other)

    def __str__(self) -> str:
        lhs = self.var if self.other is None else f"{self.var} - {self.other}"
        return f"{lhs} {self.op} {self.value}"


@dataclass(frozen=True)
class Guard:
    conjuncts: tuple[VarAtom, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.conjuncts

    def conjoin(self, other: "Guard") -> "Guard":
        return Guard(self.conjuncts + other.conjuncts)

    def variables(self) -> set[str]:
        return {v for atom in self.conjuncts for v in atom.variables()}

    def __str__(self) -> str:
        return " and ".join(str(a) for a in self.conjuncts) if self.conjuncts else "true"


ABSOLUTE_CLOCK = "T"


def relative_clock(clause: str) -> str:
    return f"t_{clause}"


@dataclass(frozen=True)
class ClockRef:
    """Either the global clock T (``clause is None``) or ``after(clause)``."""

    clause: str | None = None

    @property
    def clock(self) -> str:
        return ABSOLUTE_CLOCK if self.clause is None else relative_clock(self.clause)

    def __str__(self) -> str:
        return ABSOLUTE_CLOCK if self.clause is None else f"after({self.clause})"


@dataclass(frozen=True)
class ClockAtom:
    ref: ClockRef
    op: str
    value: int
    other: ClockRef | None = None

    def __str__(self) -> str:
        lhs = str(self.ref) if self.other is None else f"{self.ref} - {self.other}"
        return f"{lhs} {self.op} {self.value}"


@dataclass(frozen=True)
class TimeRestriction:
    conjuncts: tuple[ClockAtom, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.conjuncts

    def references(self) -> set[str]:
        out = set()
        for atom in self.conjuncts:
            for ref in (atom.ref, atom.other):
                if ref is not None and ref.clause is not None:
                    out.add(ref.clause)
        return out

    def __str__(self) -> str:
        return " and ".join(str(a) for a in self.conjuncts)


class DeonticKind(enum.Enum):
    OBLIGATION = "obligation"
    PERMISSION = "permission"
    PROHIBITION = "prohibition"

    @property
    def letter(self) -> str:
        return {"obligation": "O", "permission": "P", "prohibition": "F"}[self.value]


class RefinementKind(enum.Enum):
    AND = "and"
    OR = "or"
    SEQ = "seq"


@dataclass(frozen=True)
class Atomic:
    action: str


@dataclass(frozen=True)
class Refinement:
    kind: RefinementKind
    children: tuple["Box", ...]


@dataclass(frozen=True)
class Deontic:
    kind: DeonticKind
    body: Union[Atomic, Refinement]


Body = Union[Atomic, Deontic, Refinement]


@dataclass(frozen=True)
class Box:
    name: str
    body: Body
    agent: str | None = None
    guard: Guard = field(default_factory=Guard)
    trestr: TimeRestriction = field(default_factory=TimeRestriction)
    reparation: "Box | None" = None

    def walk(self) -> Iterator["Box"]:
        """Pre-order traversal, reparations included."""
        yield self
        body = self.body
        if isinstance(body, Deontic):
            body = body.body
        if isinstance(body, Refinement):
            for child in body.children:
                yield from child.walk()
        if self.reparation is not None:
            yield from self.reparation.walk()


@dataclass(frozen=True)
class Contract:
    name: str
    root: Box
    unit: str | None = None
    variables: tuple[tuple[str, int], ...] = ()

    @property
    def initial_valuation(self) -> dict[str, int]:
        return dict(self.variables)

    def boxes(self) -> Iterator[Box]:
        return self.root.walk()

    def find(self, name: str) -> Box | None:
        for box in self.boxes():
            if box.name == name:
                return box
        return None
