"""Timed automata extended with violation/satisfaction/permission tracking.

Set semantics live on edges as :class:`SetEffect` lists and are carried as
run state (:class:`StateSets`). Node annotations are derived display data.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Iterable

from .errors import ModelError
from .frontend.syntax import DeonticKind, Guard, VarAtom
from .temporal import ClockInterval, ClockPoint, ClockTable


class EffectKind(enum.Enum):
    ADD_VIOLATION = "add_violation"
    ADD_SATISFACTION = "add_satisfaction"
    ADD_PERMISSION = "add_permission"
    CLEAR_VIOLATION = "clear_violation"


@dataclass(frozen=True)
class SetEffect:
    kind: EffectKind
    clause: str

    def __str__(self) -> str:
        sym = {
            EffectKind.ADD_VIOLATION: "+V",
            EffectKind.ADD_SATISFACTION: "+S",
            EffectKind.ADD_PERMISSION: "+P",
            EffectKind.CLEAR_VIOLATION: "-V",
        }[self.kind]
        return f"{sym}({self.clause})"


@dataclass(frozen=True)
class StateSets:
    V: frozenset = frozenset()
    S: frozenset = frozenset()
    P: frozenset = frozenset()

    @classmethod
    def of(cls, V: Iterable[str] = (), S: Iterable[str] = (), P: Iterable[str] = ()) -> "StateSets":
        return cls(frozenset(V), frozenset(S), frozenset(P))

    def __str__(self) -> str:
        def fmt(s):
            return ",".join(sorted(s))

        return f"{{{fmt(self.V)} | {fmt(self.S)} | {fmt(self.P)}}}"


def apply_effects(sets: StateSets, effects: Iterable[SetEffect]) -> StateSets:
    V, S, P = set(sets.V), set(sets.S), set(sets.P)
    for eff in effects:
        if eff.kind is EffectKind.ADD_VIOLATION:
            V.add(eff.clause)
        elif eff.kind is EffectKind.ADD_SATISFACTION:
            S.add(eff.clause)
        elif eff.kind is EffectKind.ADD_PERMISSION:
            P.add(eff.clause)
        else:
            V.discard(eff.clause)
    return StateSets(frozenset(V), frozenset(S), frozenset(P))


class Ordering(enum.Enum):
    BETTER = "better"
    WORSE = "worse"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def _better(a: StateSets, b: StateSets) -> bool:
    return a.V < b.V or (a.V == b.V and a.S > b.S)


def compare_nodes(a: StateSets, b: StateSets) -> Ordering:
    """Rank two set triples; permission sets never take part."""
    if a.V == b.V and a.S == b.S:
        return Ordering.EQUAL
    if _better(a, b):
        return Ordering.BETTER
    if _better(b, a):
        return Ordering.WORSE
    return Ordering.INCOMPARABLE


def compare_edges(e1: "Edge", target1: StateSets, e2: "Edge", target2: StateSets) -> Ordering:
    if e1.source != e2.source:
        return Ordering.INCOMPARABLE
    return compare_nodes(target1, target2)


class NodeRole(enum.Enum):
    INIT = "init"
    END = "end"
    TIME = "time"
    SKIP = "skip"
    SYN = "syn"
    FINAL = "final"
    PLAIN = "plain"


@dataclass(frozen=True)
class Node:
    id: str
    role: NodeRole = NodeRole.PLAIN
    annot_V: frozenset = frozenset()
    annot_S: frozenset = frozenset()
    annot_P: frozenset = frozenset()


@dataclass(frozen=True)
class Action:
    name: str
    agent: str | None = None

    @property
    def flag(self) -> str:
        """Name of the boolean recording that the agent performed the action."""
        return f"{self.agent}_{self.name}" if self.agent else self.name

    def __str__(self) -> str:
        return f"{self.agent}.{self.name}" if self.agent else self.name


SEND = "send"
RECEIVE = "receive"


@dataclass(frozen=True)
class Sync:
    channel: str
    direction: str  # SEND or RECEIVE

    def __str__(self) -> str:
        return f"{self.channel}{'!' if self.direction == SEND else '?'}"


ClockGuard = tuple  # tuple[ClockInterval | ClockPoint, ...]


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    guard: Guard = field(default_factory=Guard)
    clock_guard: ClockGuard = ()
    action: Action | None = None
    sync: Sync | None = None
    resets: tuple[str, ...] = ()
    effects: tuple[SetEffect, ...] = ()
    urgent: bool = False

    def label(self) -> str:
        parts = []
        conds = [str(a) for a in self.guard.conjuncts] + [str(c) for c in self.clock_guard]
        if conds:
            parts.append(" and ".join(conds))
        if self.action is not None:
            parts.append(str(self.action))
        if self.sync is not None:
            parts.append(str(self.sync))
        if self.resets:
            parts.append(", ".join(f"{c}:=0" for c in self.resets))
        if self.effects:
            parts.append(" ".join(str(e) for e in self.effects))
        return " / ".join(parts)


@dataclass(frozen=True)
class ExtTimedAutomaton:
    """``(N, n0, E, I)`` plus the designated exit nodes used during composition."""

    name: str
    nodes: tuple[Node, ...]
    initial: str
    edges: tuple[Edge, ...]
    invariants: dict = field(default_factory=dict)  # node id -> {clock: upper bound}
    exits: tuple[str, ...] = ()

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def outgoing(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.source == node_id]

    def incoming(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.target == node_id]

    def renamed(self, name: str) -> "ExtTimedAutomaton":
        return replace(self, name=name)


@dataclass(frozen=True)
class Nta:
    name: str
    automata: tuple[ExtTimedAutomaton, ...]
    channels: dict = field(default_factory=dict)  # channel -> urgent flag
    clocks: ClockTable = field(default_factory=ClockTable)
    variables: dict = field(default_factory=dict)  # variable -> initial value
    clause_index: dict = field(default_factory=dict)  # clause -> DeonticKind

    def automaton(self, name: str) -> ExtTimedAutomaton:
        for a in self.automata:
            if a.name == name:
                return a
        raise KeyError(name)

    def ceiling(self) -> int:
        """Largest constant any clock is compared against."""
        consts = [0]
        for a in self.automata:
            for bounds in a.invariants.values():
                consts.extend(bounds.values())
            for e in a.edges:
                for c in e.clock_guard:
                    consts.extend(c.constants())
        return max(consts)


def annotate(a: ExtTimedAutomaton) -> ExtTimedAutomaton:
    """Record on each node the clauses that edges entering it add to V/S/P."""
    adds: dict[str, tuple[set, set, set]] = {n.id: (set(), set(), set()) for n in a.nodes}
    for e in a.edges:
        V, S, P = adds[e.target]
        for eff in e.effects:
            if eff.kind is EffectKind.ADD_VIOLATION:
                V.add(eff.clause)
            elif eff.kind is EffectKind.ADD_SATISFACTION:
                S.add(eff.clause)
            elif eff.kind is EffectKind.ADD_PERMISSION:
                P.add(eff.clause)
    nodes = tuple(
        replace(n, annot_V=frozenset(adds[n.id][0]), annot_S=frozenset(adds[n.id][1]), annot_P=frozenset(adds[n.id][2]))
        for n in a.nodes
    )
    return replace(a, nodes=nodes)


def check_wellformed(nta: Nta) -> list[str]:
    """Structural problems of ``nta``; an empty list means well formed."""
    problems: list[str] = []
    names = [a.name for a in nta.automata]
    if len(set(names)) != len(names):
        problems.append("automaton names are not unique")
    senders: dict[str, set[str]] = {}
    receivers: dict[str, set[str]] = {}
    resets: set[str] = set()
    effect_clauses: set[str] = set()
    for a in nta.automata:
        ids = a.node_ids
        if len(set(ids)) != len(ids):
            problems.append(f"{a.name}: node ids are not unique")
        idset = set(ids)
        if a.initial not in idset:
            problems.append(f"{a.name}: initial node {a.initial!r} is not a node")
        for node_id in a.invariants:
            if node_id not in idset:
                problems.append(f"{a.name}: invariant on unknown node {node_id!r}")
        for e in a.edges:
            for end in (e.source, e.target):
                if end not in idset:
                    problems.append(f"{a.name}: edge endpoint {end!r} is not a node")
            if e.action is not None and e.sync is not None:
                problems.append(f"{a.name}: edge {e.source}->{e.target} has both action and sync")
            if e.urgent and e.clock_guard:
                problems.append(f"{a.name}: urgent edge {e.source}->{e.target} has a clock guard")
            if e.sync is not None:
                table = senders if e.sync.direction == "send" else receivers
                table.setdefault(e.sync.channel, set()).add(a.name)
                if e.sync.channel not in nta.channels:
                    problems.append(f"{a.name}: undeclared channel {e.sync.channel!r}")
            for c in e.resets:
                resets.add(c)
                if c not in nta.clocks:
                    problems.append(f"{a.name}: reset of unknown clock {c!r}")
            for eff in e.effects:
                effect_clauses.add(eff.clause)
            for var in e.guard.variables():
                if var not in nta.variables:
                    problems.append(f"{a.name}: guard uses undeclared variable {var!r}")
            for cg in e.clock_guard:
                if cg.clock not in nta.clocks:
                    problems.append(f"{a.name}: guard on unknown clock {cg.clock!r}")
    for ch in nta.channels:
        s, r = senders.get(ch, set()), receivers.get(ch, set())
        if len(s) != 1 or len(r) != 1:
            problems.append(f"channel {ch!r} needs exactly one sending and one receiving automaton")
        elif s == r:
            problems.append(f"channel {ch!r} synchronizes an automaton with itself")
    if nta.clocks.clocks[:1] != ("T",):
        problems.append("clock table must start with the global clock T")
    if "T" in resets:
        problems.append("the global clock T is reset")
    for c in nta.clocks.additional:
        if c not in resets:
            problems.append(f"relative clock {c!r} is never reset")
    for clause in sorted(effect_clauses - set(nta.clause_index)):
        problems.append(f"clause {clause!r} used in an effect is missing from the clause index")
    return problems


def require_wellformed(nta: Nta) -> Nta:
    problems = check_wellformed(nta)
    if problems:
        raise ModelError("; ".join(problems))
    return nta


# -- canonical JSON ------------------------------------------------------

FORMAT = "codiagram-nta/1"


def _atom_json(a: VarAtom) -> dict:
    return {"var": a.var, "minus": a.other, "op": a.op, "value": a.value}


def _clock_json(c) -> dict:
    if isinstance(c, ClockPoint):
        return {"clock": c.clock, "equals": c.value}
    return {"clock": c.clock, "lower": c.lower, "upper": c.upper}


def _edge_json(e: Edge) -> dict:
    return {
        "source": e.source,
        "target": e.target,
        "guard": [_atom_json(a) for a in e.guard.conjuncts],
        "clock_guard": [_clock_json(c) for c in e.clock_guard],
        "action": None if e.action is None else {"name": e.action.name, "agent": e.action.agent},
        "sync": None if e.sync is None else {"channel": e.sync.channel, "direction": e.sync.direction},
        "resets": list(e.resets),
        "effects": [{"kind": f.kind.value, "clause": f.clause} for f in e.effects],
        "urgent": e.urgent,
    }


def nta_to_dict(nta: Nta) -> dict:
    return {
        "format": FORMAT,
        "name": nta.name,
        "clocks": list(nta.clocks.clocks),
        "variables": dict(nta.variables),
        "channels": [{"name": ch, "urgent": urgent} for ch, urgent in nta.channels.items()],
        "clause_index": {k: v.value for k, v in nta.clause_index.items()},
        "automata": [
            {
                "name": a.name,
                "initial": a.initial,
                "exits": list(a.exits),
                "nodes": [
                    {
                        "id": n.id,
                        "role": n.role.value,
                        "V": sorted(n.annot_V),
                        "S": sorted(n.annot_S),
                        "P": sorted(n.annot_P),
                    }
                    for n in a.nodes
                ],
                "invariants": {node: dict(bounds) for node, bounds in a.invariants.items()},
                "edges": [_edge_json(e) for e in a.edges],
            }
            for a in nta.automata
        ],
    }


def to_json(nta: Nta) -> str:
    return json.dumps(nta_to_dict(nta), indent=2) + "\n"


def _clock_from(d: dict):
    if "equals" in d:
        return ClockPoint(d["clock"], d["equals"])
    return ClockInterval(d["clock"], d["lower"], d["upper"])


def _edge_from(d: dict) -> Edge:
    return Edge(
        source=d["source"],
        target=d["target"],
        guard=Guard(tuple(VarAtom(a["var"], a["op"], a["value"], a["minus"]) for a in d["guard"])),
        clock_guard=tuple(_clock_from(c) for c in d["clock_guard"]),
        action=None if d["action"] is None else Action(d["action"]["name"], d["action"]["agent"]),
        sync=None if d["sync"] is None else Sync(d["sync"]["channel"], d["sync"]["direction"]),
        resets=tuple(d["resets"]),
        effects=tuple(SetEffect(EffectKind(f["kind"]), f["clause"]) for f in d["effects"]),
        urgent=d["urgent"],
    )


def nta_from_dict(d: dict) -> Nta:
    if d.get("format") != FORMAT:
        raise ModelError(f"unsupported model format {d.get('format')!r}")
    automata = tuple(
        ExtTimedAutomaton(
            name=a["name"],
            nodes=tuple(
                Node(n["id"], NodeRole(n["role"]), frozenset(n["V"]), frozenset(n["S"]), frozenset(n["P"]))
                for n in a["nodes"]
            ),
            initial=a["initial"],
            edges=tuple(_edge_from(e) for e in a["edges"]),
            invariants={node: dict(b) for node, b in a["invariants"].items()},
            exits=tuple(a["exits"]),
        )
        for a in d["automata"]
    )
    return Nta(
        name=d["name"],
        automata=automata,
        channels={c["name"]: c["urgent"] for c in d["channels"]},
        clocks=ClockTable(tuple(d["clocks"])),
        variables=dict(d["variables"]),
        clause_index={k: DeonticKind(v) for k, v in d["clause_index"].items()},
    )


def from_json(text: str) -> Nta:
    return nta_from_dict(json.loads(text))
