"""Order the terminal states of an exploration by their V/S sets."""
from __future__ import annotations

from dataclasses import dataclass

from ..nta import Ordering, StateSets, compare_nodes
from .semantics import StateGraph


@dataclass(frozen=True)
class RankClass:
    """Terminal states sharing one V/S outcome."""

    level: int
    sets: StateSets
    states: tuple[int, ...]
    better_than: tuple[int, ...]  # indices of classes this one strictly beats
    incomparable_with: tuple[int, ...]


def _key(s: StateSets):
    return (len(s.V), sorted(s.V), -len(s.S), sorted(s.S))


def rank_terminals(g: StateGraph) -> list[RankClass]:
    """Group terminals by outcome and layer the groups.

    Level 0 holds the outcomes nothing beats; each further level holds the
    outcomes beaten only by earlier levels.
    """
    groups: dict[tuple, list[int]] = {}
    for i in g.terminals():
        s = g.states[i].sets
        groups.setdefault((s.V, s.S), []).append(i)
    reps = sorted((StateSets(V, S, frozenset()) for V, S in groups), key=_key)
    n = len(reps)
    rel = [[compare_nodes(reps[a], reps[b]) for b in range(n)] for a in range(n)]
    level = [-1] * n
    placed = 0
    current = 0
    while placed < n:
        layer = [
            a for a in range(n)
            if level[a] < 0 and all(level[b] >= 0 for b in range(n) if rel[b][a] is Ordering.BETTER)
        ]
        for a in layer:
            level[a] = current
        placed += len(layer)
        current += 1
    order = sorted(range(n), key=lambda a: (level[a], _key(reps[a])))
    pos = {a: k for k, a in enumerate(order)}
    out = []
    for a in order:
        r = reps[a]
        out.append(
            RankClass(
                level=level[a],
                sets=r,
                states=tuple(groups[(r.V, r.S)]),
                better_than=tuple(sorted(pos[b] for b in range(n) if rel[a][b] is Ordering.BETTER)),
                incomparable_with=tuple(sorted(pos[b] for b in range(n) if rel[a][b] is Ordering.INCOMPARABLE)),
            )
        )
    return out


def format_ranking(classes: list[RankClass]) -> str:
    lines = []
    for k, c in enumerate(classes):
        V = ",".join(sorted(c.sets.V)) or "-"
        S = ",".join(sorted(c.sets.S)) or "-"
        lines.append(f"class {k} level {c.level}: V={{{V}}} S={{{S}}} terminals={len(c.states)}")
        if c.better_than:
            lines.append("  better than: " + ", ".join(f"class {b}" for b in c.better_than))
        if c.incomparable_with:
            lines.append("  incomparable with: " + ", ".join(f"class {b}" for b in c.incomparable_with))
    return "\n".join(lines) + ("\n" if lines else "")
