"""Clock intervals, the clock table, and integer guard evaluation/negation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import (
    ContradictoryRestriction,
    EmptyGuard,
    MissingVariable,
    MixedClocks,
    UnsupportedConstraint,
)
from .frontend.syntax import (
    ABSOLUTE_CLOCK,
    Contract,
    Guard,
    TimeRestriction,
    VarAtom,
    compare,
    relative_clock,
)


@dataclass(frozen=True)
class ClockInterval:
    """``lower <= clock <= upper``; ``upper is None`` means unbounded."""

    clock: str = ABSOLUTE_CLOCK
    lower: int = 0
    upper: int | None = None

    def __post_init__(self):
        if self.upper is not None and self.lower > self.upper:
            raise ContradictoryRestriction(f"empty interval [{self.lower}, {self.upper}] on {self.clock}")

    @property
    def bounded(self) -> bool:
        return self.upper is not None

    @property
    def trivial(self) -> bool:
        return self.lower == 0 and self.upper is None

    def contains(self, value: int) -> bool:
        return self.lower <= value and (self.upper is None or value <= self.upper)

    def intersect(self, other: "ClockInterval") -> "ClockInterval":
        if other.clock != self.clock:
            raise MixedClocks(f"cannot intersect intervals on {self.clock} and {other.clock}")
        uppers = [u for u in (self.upper, other.upper) if u is not None]
        return ClockInterval(self.clock, max(self.lower, other.lower), min(uppers) if uppers else None)

    def constants(self) -> tuple[int, ...]:
        return (self.lower,) if self.upper is None else (self.lower, self.upper)

    def __str__(self) -> str:
        parts = []
        if self.lower:
            parts.append(f"{self.clock} >= {self.lower}")
        if self.upper is not None:
            parts.append(f"{self.clock} <= {self.upper}")
        return " and ".join(parts) or "true"


@dataclass(frozen=True)
class ClockPoint:
    """``clock == value``: the timeout guard of a norm."""

    clock: str
    value: int

    def contains(self, value: int) -> bool:
        return value == self.value

    def constants(self) -> tuple[int, ...]:
        return (self.value,)

    def __str__(self) -> str:
        return f"{self.clock} == {self.value}"


def normalize_restriction(tr: TimeRestriction) -> ClockInterval:
    """Tightest single-clock interval implied by ``tr``.

    The empty restriction maps to ``(T, 0, unbounded)``.
    """
    if tr.is_empty:
        return ClockInterval()
    clocks = set()
    lower, upper = 0, None
    for atom in tr.conjuncts:
        if atom.other is not None:
            raise UnsupportedConstraint(f"clock difference {atom} cannot be turned into an interval")
        clocks.add(atom.ref.clock)
        n = atom.value
        if atom.op in (">=", ">", "=="):
            lo = n + 1 if atom.op == ">" else n
            lower = max(lower, lo)
        if atom.op in ("<=", "<", "=="):
            hi = n - 1 if atom.op == "<" else n
            upper = hi if upper is None else min(upper, hi)
    if len(clocks) > 1:
        raise MixedClocks(f"restriction {tr} mixes clocks {sorted(clocks)}")
    if upper is not None and (upper < 0 or lower > upper):
        raise ContradictoryRestriction(f"restriction {tr} admits no clock value")
    return ClockInterval(clocks.pop(), lower, upper)


@dataclass(frozen=True)
class ClockTable:
    """The global clock T followed by one relative clock per referenced clause."""

    clocks: tuple[str, ...] = (ABSOLUTE_CLOCK,)

    @classmethod
    def for_contract(cls, contract: Contract) -> "ClockTable":
        refs: list[str] = []
        for box in contract.boxes():
            for atom in box.trestr.conjuncts:
                for ref in (atom.ref, atom.other):
                    if ref is not None and ref.clause is not None and ref.clause not in refs:
                        refs.append(ref.clause)
        return cls((ABSOLUTE_CLOCK,) + tuple(relative_clock(r) for r in sorted(refs)))

    def __contains__(self, clock: str) -> bool:
        return clock in self.clocks

    def __iter__(self):
        return iter(self.clocks)

    def __len__(self) -> int:
        return len(self.clocks)

    @property
    def additional(self) -> tuple[str, ...]:
        return self.clocks[1:]


def _atom_holds(atom: VarAtom, val: Mapping[str, int]) -> bool:
    try:
        lhs = val[atom.var] if atom.other is None else val[atom.var] - val[atom.other]
    except KeyError as exc:
        raise MissingVariable(f"no value for variable {exc.args[0]!r}") from None
    return compare(lhs, atom.op, atom.value)


def eval_guard(g: Guard, val: Mapping[str, int]) -> bool:
    return all(_atom_holds(atom, val) for atom in g.conjuncts)


def _complement(atom: VarAtom) -> list[VarAtom]:
    n, op = atom.value, atom.op
    if op == "<=":
        pieces = [(">=", n + 1)]
    elif op == "<":
        pieces = [(">=", n)]
    elif op == ">=":
        pieces = [("<=", n - 1)]
    elif op == ">":
        pieces = [("<=", n)]
    else:
        pieces = [("<=", n - 1), (">=", n + 1)]
    return [VarAtom(atom.var, o, v, atom.other) for o, v in pieces]


def negate_guard(g: Guard) -> list[Guard]:
    """Integer complement of ``g`` as a disjunction of single-atom guards."""
    if g.is_empty:
        raise EmptyGuard("the empty guard has no complement to take")
    out: list[Guard] = []
    for atom in g.conjuncts:
        for piece in _complement(atom):
            guard = Guard((piece,))
            if guard not in out:
                out.append(guard)
    return out
