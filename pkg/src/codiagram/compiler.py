"""Translate a validated contract into a network of extended timed automata.

Each public ``compile_*``/``product_*``/... function implements one
construction over automata; :func:`compile_contract` walks the contract and
dispatches on box shape. Node ids follow ``<clause>.<role>`` so compiled
models can be cross-referenced from queries and tests.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .errors import (
    CompileError,
    ContradictoryRestriction,
    InvalidInterval,
    MissingAgent,
    MixedClocks,
    ReparationOnPermission,
)
from .frontend.syntax import (
    Atomic,
    Box,
    Contract,
    Deontic,
    DeonticKind,
    Guard,
    Refinement,
    RefinementKind,
    relative_clock,
)
from .frontend.rules import raise_for_findings, validate
from .nta import (
    RECEIVE,
    SEND,
    Action,
    EffectKind,
    Edge,
    ExtTimedAutomaton,
    Node,
    NodeRole,
    Nta,
    SetEffect,
    Sync,
    annotate,
    require_wellformed,
)
from .temporal import ClockInterval, ClockPoint, ClockTable, negate_guard, normalize_restriction

O, P, F = DeonticKind.OBLIGATION, DeonticKind.PERMISSION, DeonticKind.PROHIBITION


@dataclass(frozen=True)
class CompileContext:
    """What a norm needs to know about its clause."""

    name: str
    agent: str | None
    guard: Guard = Guard()
    windows: tuple[ClockInterval, ...] = ()  # at most one per clock
    clocks: ClockTable = ClockTable()

    @property
    def tracked(self) -> bool:
        return relative_clock(self.name) in self.clocks


# -- action automata -----------------------------------------------------


def compile_atomic(action: str, owner: str) -> ExtTimedAutomaton:
    init, end = f"{owner}.{action}_init", f"{owner}.{action}_end"
    return ExtTimedAutomaton(
        name=owner,
        nodes=(Node(init, NodeRole.INIT), Node(end, NodeRole.END)),
        initial=init,
        edges=(Edge(init, end, action=Action(action)),),
        exits=(end,),
    )


def _single_exit(a: ExtTimedAutomaton) -> str:
    if len(a.exits) != 1:
        raise CompileError(f"action automaton {a.name!r} must have exactly one end node")
    return a.exits[0]


def product_and(parts: list[ExtTimedAutomaton], owner: str) -> ExtTimedAutomaton:
    """Interleaving product of action automata."""
    if len(parts) < 2:
        raise CompileError("a product needs at least two automata")
    for p in parts:
        if any(e.effects for e in p.edges):
            raise CompileError(f"product operand {p.name!r} carries set effects")
    index = [{nid: k for k, nid in enumerate(p.node_ids)} for p in parts]
    init_t = tuple(ix[p.initial] for p, ix in zip(parts, index))
    end_t = tuple(ix[_single_exit(p)] for p, ix in zip(parts, index))

    def nid(t: tuple[int, ...]) -> str:
        return f"{owner}.and_" + "_".join(map(str, t))

    combos = list(itertools.product(*(range(len(p.nodes)) for p in parts)))
    nodes = []
    for t in combos:
        role = NodeRole.INIT if t == init_t else NodeRole.END if t == end_t else NodeRole.PLAIN
        nodes.append(Node(nid(t), role))
    edges = []
    for t in combos:
        for k, p in enumerate(parts):
            here = p.node_ids[t[k]]
            for e in p.outgoing(here):
                u = t[:k] + (index[k][e.target],) + t[k + 1 :]
                edges.append(replace(e, source=nid(t), target=nid(u)))
    return ExtTimedAutomaton(owner, tuple(nodes), nid(init_t), tuple(edges), {}, (nid(end_t),))


def alt_or(parts: list[ExtTimedAutomaton], owner: str) -> ExtTimedAutomaton:
    if len(parts) < 2:
        raise CompileError("a choice needs at least two automata")
    init, end = f"{owner}.or_init", f"{owner}.or_end"
    nodes = [Node(init, NodeRole.INIT)]
    edges = []
    invariants: dict = {}
    for p in parts:
        nodes.extend(p.nodes)
        edges.extend(p.edges)
        invariants.update(p.invariants)
    edges.extend(Edge(init, p.initial, urgent=True) for p in parts)
    edges.extend(Edge(_single_exit(p), end, urgent=True) for p in parts)
    nodes.append(Node(end, NodeRole.END))
    return ExtTimedAutomaton(owner, tuple(nodes), init, tuple(edges), invariants, (end,))


def seq_chain(parts: list[ExtTimedAutomaton], owner: str) -> ExtTimedAutomaton:
    if len(parts) < 2:
        raise CompileError("a sequence needs at least two automata")
    nodes, edges, invariants = [], [], {}
    for p in parts:
        nodes.extend(p.nodes)
        edges.extend(p.edges)
        invariants.update(p.invariants)
    for a, b in zip(parts, parts[1:]):
        edges.append(Edge(_single_exit(a), b.initial, urgent=True))
    return ExtTimedAutomaton(owner, tuple(nodes), parts[0].initial, tuple(edges), invariants, (_single_exit(parts[-1]),))


# -- norms ---------------------------------------------------------------

_ON_END = {O: EffectKind.ADD_SATISFACTION, P: EffectKind.ADD_PERMISSION, F: EffectKind.ADD_VIOLATION}
_ON_TIMEOUT = {O: (EffectKind.ADD_VIOLATION,), P: (), F: (EffectKind.ADD_SATISFACTION,)}


def timeout_node(name: str) -> str:
    return f"{name}.timeout"


def skip_node(name: str) -> str:
    return f"{name}.skip"


def final_node(name: str) -> str:
    return f"{name}.final"


def _skip_edges(source: str, target: str, guard: Guard) -> list[Edge]:
    return [Edge(source, target, guard=h, urgent=True) for h in negate_guard(guard)]


def _gate(edges: list[Edge], node: str, guard: Guard) -> list[Edge]:
    """Conjoin ``guard`` onto every edge leaving ``node``."""
    if guard.is_empty:
        return edges
    return [replace(e, guard=e.guard.conjoin(guard)) if e.source == node else e for e in edges]


def apply_deontic(kind: DeonticKind, A: ExtTimedAutomaton, ctx: CompileContext) -> ExtTimedAutomaton:
    """Wrap action automaton ``A`` in an obligation, permission or prohibition.

    Action edges get the clause window and agent; every node but the end node
    gets the invariant ``x <= t2 + 1`` and a timeout edge ``x == t2 + 1``.
    With an unbounded window there is no timeout node at all.
    """
    if ctx.agent is None:
        raise MissingAgent(f"clause {ctx.name!r} applies a norm without an agent")
    name, init, end = ctx.name, A.initial, _single_exit(A)
    window_guard = tuple(w for w in ctx.windows if not w.trivial)
    bounded = [w for w in ctx.windows if w.bounded]
    own_reset = (relative_clock(name),) if ctx.tracked else ()

    edges = []
    for e in A.edges:
        if e.action is not None:
            e = replace(e, clock_guard=e.clock_guard + window_guard, action=Action(e.action.name, ctx.agent))
        if e.target == end:
            resets = e.resets + (own_reset if kind is not F else ())
            e = replace(e, effects=e.effects + (SetEffect(_ON_END[kind], name),), resets=resets)
        edges.append(e)

    nodes = list(A.nodes)
    invariants = {k: dict(v) for k, v in A.invariants.items()}
    if bounded:
        tnode = timeout_node(name)
        nodes.append(Node(tnode, NodeRole.TIME))
        effects = tuple(SetEffect(k, name) for k in _ON_TIMEOUT[kind])
        resets = own_reset if kind is F else ()
        for n in A.nodes:
            if n.id == end:
                continue
            inv = invariants.setdefault(n.id, {})
            for w in bounded:
                inv[w.clock] = min(inv.get(w.clock, w.upper + 1), w.upper + 1)
                edges.append(
                    Edge(n.id, tnode, clock_guard=(ClockPoint(w.clock, w.upper + 1),), resets=resets, effects=effects)
                )
    edges = _gate(edges, init, ctx.guard)
    if not ctx.guard.is_empty:
        nodes.append(Node(skip_node(name), NodeRole.SKIP))
        edges.extend(_skip_edges(init, skip_node(name), ctx.guard))
    return ExtTimedAutomaton(name, tuple(nodes), init, tuple(edges), invariants, (end,))


def violation_node(DA: ExtTimedAutomaton, kind: DeonticKind) -> str | None:
    if kind is P:
        return None
    node = timeout_node(DA.name) if kind is O else DA.exits[0]
    return node if node in DA.node_ids else None


def attach_reparation(DA: ExtTimedAutomaton, R: ExtTimedAutomaton, kind: DeonticKind) -> ExtTimedAutomaton:
    """Graft reparation ``R`` so that it starts where ``DA`` is violated.

    Edges entering an exit of ``R`` clear the violation. The exits of ``R``
    are appended to the exits of the result.
    """
    if kind is P:
        raise ReparationOnPermission(f"permission {DA.name!r} cannot carry a reparation")
    vio = violation_node(DA, kind)
    if vio is None:
        return DA
    name = DA.name
    clear = SetEffect(EffectKind.CLEAR_VIOLATION, name)
    edges = list(DA.edges)
    for e in R.edges:
        if e.target == R.initial:
            raise CompileError(f"reparation {R.name!r} re-enters its initial node")
        effects = e.effects + (clear,) if e.target in R.exits else e.effects
        edges.append(replace(e, source=vio if e.source == R.initial else e.source, effects=effects))
    invariants = {k: dict(v) for k, v in DA.invariants.items()}
    invariants.pop(vio, None)
    for node, bounds in R.invariants.items():
        invariants[vio if node == R.initial else node] = dict(bounds)
    nodes = DA.nodes + tuple(n for n in R.nodes if n.id != R.initial)
    return ExtTimedAutomaton(name, nodes, DA.initial, tuple(edges), invariants, DA.exits + R.exits)


def finalize(DA: ExtTimedAutomaton, kind: DeonticKind, has_reparation: bool) -> ExtTimedAutomaton:
    """Add the single ending node; unrepaired violation nodes stay terminal."""
    name = DA.name
    ids = set(DA.node_ids)
    end, rep_ends = DA.exits[0], list(DA.exits[1:]) if has_reparation else []
    tnode = timeout_node(name)
    sources = [skip_node(name)] if skip_node(name) in ids else []
    if kind is O:
        sources += [end] + rep_ends
    elif kind is P:
        sources += [end] + ([tnode] if tnode in ids else [])
    else:
        sources += ([tnode] if tnode in ids else []) + rep_ends
    final = final_node(name)
    edges = DA.edges + tuple(Edge(s, final, urgent=True) for s in sources)
    return replace(DA, nodes=DA.nodes + (Node(final, NodeRole.FINAL),), edges=edges, exits=(final,))


# -- composition of norms --------------------------------------------------


def compose_and_norms(
    parts: list[ExtTimedAutomaton], name: str, guard: Guard, channels: list[str]
) -> list[ExtTimedAutomaton]:
    """Run finalized norms in parallel behind a start/finish barrier.

    Returns the network; its first automaton owns the composition's init,
    final and skip nodes. ``channels`` supplies the n-1 urgent channel names.
    """
    n = len(parts)
    if n < 2:
        raise CompileError("a conjunction needs at least two norms")
    if len(channels) != n - 1:
        raise CompileError("conjunction of n norms needs n-1 channels")
    first = parts[0]
    init, final = f"{name}.init", final_node(name)
    nodes = [Node(init, NodeRole.INIT), *first.nodes, Node(final, NodeRole.FINAL)]
    edges = list(first.edges)
    edges.append(Edge(init, first.initial, guard=guard, sync=Sync(channels[0], SEND)))
    edges.extend(Edge(x, final, sync=Sync(channels[0], SEND)) for x in first.exits)
    exits = [final]
    if not guard.is_empty:
        nodes.append(Node(skip_node(name), NodeRole.SKIP))
        edges.extend(_skip_edges(init, skip_node(name), guard))
        exits.append(skip_node(name))
    network = [ExtTimedAutomaton(name, tuple(nodes), init, tuple(edges), dict(first.invariants), tuple(exits))]

    for i in range(2, n + 1):
        p = parts[i - 1]
        prev = channels[i - 2]
        wait, done = f"{name}.a{i}_wait", f"{name}.a{i}_final"
        nodes = [Node(wait, NodeRole.SYN), *p.nodes]
        edges = list(p.edges)
        if i < n:
            fwd, join = f"{name}.a{i}_fwd", f"{name}.a{i}_join"
            nxt = channels[i - 1]
            nodes += [Node(fwd, NodeRole.SYN), Node(join, NodeRole.SYN)]
            edges.append(Edge(wait, fwd, sync=Sync(prev, RECEIVE)))
            edges.append(Edge(fwd, p.initial, sync=Sync(nxt, SEND)))
            edges.extend(Edge(x, join, sync=Sync(nxt, SEND)) for x in p.exits)
            edges.append(Edge(join, done, sync=Sync(prev, RECEIVE)))
        else:
            edges.append(Edge(wait, p.initial, sync=Sync(prev, RECEIVE)))
            edges.extend(Edge(x, done, sync=Sync(prev, RECEIVE)) for x in p.exits)
        nodes.append(Node(done, NodeRole.FINAL))
        network.append(ExtTimedAutomaton(f"{name}.{i}", tuple(nodes), wait, tuple(edges), dict(p.invariants), (done,)))
    return network


def compose_or_norms(parts: list[ExtTimedAutomaton], name: str, guard: Guard) -> ExtTimedAutomaton:
    if len(parts) < 2:
        raise CompileError("a choice needs at least two norms")
    init, final = f"{name}.init", final_node(name)
    nodes = [Node(init, NodeRole.INIT)]
    edges: list[Edge] = []
    invariants: dict = {}
    for p in parts:
        nodes.extend(p.nodes)
        edges.extend(p.edges)
        invariants.update(p.invariants)
        edges.append(Edge(init, p.initial, guard=guard, urgent=True))
    for p in parts:
        edges.extend(Edge(x, final, urgent=True) for x in p.exits)
    nodes.append(Node(final, NodeRole.FINAL))
    exits = [final]
    if not guard.is_empty:
        nodes.append(Node(skip_node(name), NodeRole.SKIP))
        edges.extend(_skip_edges(init, skip_node(name), guard))
        exits.append(skip_node(name))
    return ExtTimedAutomaton(name, tuple(nodes), init, tuple(edges), invariants, tuple(exits))


def compose_seq_norms(parts: list[ExtTimedAutomaton], name: str, guard: Guard) -> ExtTimedAutomaton:
    if len(parts) < 2:
        raise CompileError("a sequence needs at least two norms")
    nodes: list[Node] = []
    edges: list[Edge] = []
    invariants: dict = {}
    for p in parts:
        nodes.extend(p.nodes)
        edges.extend(p.edges)
        invariants.update(p.invariants)
    for a, b in zip(parts, parts[1:]):
        edges.extend(Edge(x, b.initial, urgent=True) for x in a.exits)
    start = parts[0].initial
    edges = _gate(edges, start, guard)
    exits = list(parts[-1].exits)
    if not guard.is_empty:
        nodes.append(Node(skip_node(name), NodeRole.SKIP))
        edges.extend(_skip_edges(start, skip_node(name), guard))
        exits.append(skip_node(name))
    return ExtTimedAutomaton(name, tuple(nodes), start, tuple(edges), invariants, tuple(exits))


# -- driver ----------------------------------------------------------------


def _merge_windows(inherited: tuple[ClockInterval, ...], own: ClockInterval, clause: str) -> tuple[ClockInterval, ...]:
    out = list(inherited)
    if own.trivial:
        return tuple(out)
    for k, w in enumerate(out):
        if w.clock == own.clock:
            try:
                out[k] = w.intersect(own)
            except ContradictoryRestriction:
                raise InvalidInterval(f"clause {clause!r}: its window is disjoint from the enclosing one") from None
            return tuple(out)
    out.append(own)
    return tuple(out)


class _Compiler:
    def __init__(self, contract: Contract):
        self.contract = contract
        self.clocks = ClockTable.for_contract(contract)
        self.clause_index: dict[str, DeonticKind] = {}
        self.channels: list[str] = []
        self.extra: list[ExtTimedAutomaton] = []

    def new_channel(self) -> str:
        ch = f"m_{len(self.channels) + 1}"
        self.channels.append(ch)
        return ch

    def action(self, body, owner: str) -> ExtTimedAutomaton:
        if isinstance(body, Atomic):
            return compile_atomic(body.action, owner)
        if not isinstance(body, Refinement):
            raise CompileError(f"box {owner!r}: a norm cannot apply to another norm")
        parts = [self.action(child.body, child.name) for child in body.children]
        build = {RefinementKind.AND: product_and, RefinementKind.OR: alt_or, RefinementKind.SEQ: seq_chain}
        return build[body.kind](parts, owner)

    def box(self, box: Box, inherited: tuple[ClockInterval, ...] = ()) -> ExtTimedAutomaton:
        try:
            own = normalize_restriction(box.trestr)
        except (ContradictoryRestriction, MixedClocks) as exc:
            raise InvalidInterval(f"clause {box.name!r}: {exc}") from None
        windows = _merge_windows(inherited, own, box.name)
        body = box.body
        if isinstance(body, Deontic):
            kind = body.kind
            self.clause_index[box.name] = kind
            A = self.action(body.body, box.name)
            ctx = CompileContext(box.name, box.agent, box.guard, windows, self.clocks)
            DA = apply_deontic(kind, A, ctx)
            if box.reparation is not None:
                if kind is P:
                    raise ReparationOnPermission(f"permission {box.name!r} cannot carry a reparation")
                if violation_node(DA, kind) is not None:
                    # the reparation is a contract of its own; enclosing windows do not apply
                    DA = attach_reparation(DA, self.box(box.reparation), kind)
            return finalize(DA, kind, box.reparation is not None)
        if isinstance(body, Refinement):
            parts = [self.box(child, windows) for child in body.children]
            if body.kind is RefinementKind.AND:
                channels = [self.new_channel() for _ in parts[1:]]
                network = compose_and_norms(parts, box.name, box.guard, channels)
                self.extra.extend(network[1:])
                main = network[0]
            elif body.kind is RefinementKind.OR:
                main = compose_or_norms(parts, box.name, box.guard)
            else:
                main = compose_seq_norms(parts, box.name, box.guard)
            return self._reset_when_done(main, box.name)
        raise CompileError(f"clause {box.name!r} performs action {body.action!r} without a norm")

    def _reset_when_done(self, a: ExtTimedAutomaton, name: str) -> ExtTimedAutomaton:
        clock = relative_clock(name)
        if clock not in self.clocks:
            return a
        done = {x for x in a.exits if x != skip_node(name)}
        edges = tuple(replace(e, resets=e.resets + (clock,)) if e.target in done else e for e in a.edges)
        return replace(a, edges=edges)

    def run(self) -> Nta:
        main = self.box(self.contract.root)
        automata = [main, *self.extra]
        automata = tuple(annotate(a).renamed(f"A{i}") for i, a in enumerate(automata, start=1))
        return Nta(
            name=self.contract.name,
            automata=automata,
            channels={ch: True for ch in self.channels},
            clocks=self.clocks,
            variables=dict(self.contract.variables),
            clause_index=dict(self.clause_index),
        )


def compile_contract(contract: Contract, *, check: bool = True) -> Nta:
    """Compile ``contract`` into a well-formed network of automata."""
    if check:
        raise_for_findings(validate(contract))
    return require_wellformed(_Compiler(contract).run())


def compile_action_tree(body, owner: str = "act") -> ExtTimedAutomaton:
    """Action automaton for a bare action tree (no norm applied)."""
    return _Compiler(Contract(owner, Box(owner, body))).action(body, owner)
