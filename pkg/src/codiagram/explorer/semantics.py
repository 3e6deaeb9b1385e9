"""Discrete-time operational semantics of a network of automata.

Clocks advance in unit steps and saturate at ``ceiling + 1``; any value above
the largest constant compared against a clock behaves the same, so the
saturated state space is finite.
"""
from __future__ import annotations

from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

from ..nta import StateSets, Nta, apply_effects
from ..temporal import eval_guard


@dataclass(frozen=True)
class ExplorationState:
    locs: tuple[str, ...]
    clocks: tuple[int, ...]
    vars: tuple[int, ...]
    sets: StateSets = StateSets()
    done: frozenset = frozenset()


@dataclass(frozen=True)
class Step:
    """A delay (``moves == ()``) or one/two edge firings ``(automaton, edge)``."""

    kind: str  # "delay" | "edge" | "sync"
    moves: tuple[tuple[int, int], ...] = ()
    label: str = field(default="", compare=False)


DELAY = Step("delay", (), "delay 1")


class Semantics:
    """Pre-indexed view of an :class:`Nta` for fast successor computation."""

    def __init__(self, nta: Nta, extra_constants: Iterable[int] = ()):
        self.nta = nta
        self.clock_names = tuple(nta.clocks.clocks)
        self.clock_ix = {c: i for i, c in enumerate(self.clock_names)}
        self.var_names = tuple(nta.variables)
        self.ceiling = max([nta.ceiling(), *extra_constants])
        self.cap = self.ceiling + 1
        self.names = [a.name for a in nta.automata]
        self.out: list[dict[str, list[int]]] = []
        self.inv: list[dict[str, list[tuple[int, int]]]] = []
        for a in nta.automata:
            table: dict[str, list[int]] = {n: [] for n in a.node_ids}
            for k, e in enumerate(a.edges):
                table[e.source].append(k)
            self.out.append(table)
            self.inv.append(
                {node: [(self.clock_ix[c], b) for c, b in sorted(bounds.items())] for node, bounds in a.invariants.items()}
            )

    # -- state helpers ---------------------------------------------------
    def initial(self) -> ExplorationState:
        return ExplorationState(
            locs=tuple(a.initial for a in self.nta.automata),
            clocks=tuple(0 for _ in self.clock_names),
            vars=tuple(self.nta.variables[v] for v in self.var_names),
        )

    def valuation(self, s: ExplorationState) -> dict[str, int]:
        return dict(zip(self.var_names, s.vars))

    def clock_values(self, s: ExplorationState) -> dict[str, int]:
        return dict(zip(self.clock_names, s.clocks))

    def edge(self, a: int, k: int):
        return self.nta.automata[a].edges[k]

    def invariants_hold(self, locs, clocks) -> bool:
        for a, loc in enumerate(locs):
            for ci, bound in self.inv[a].get(loc, ()):
                if clocks[ci] > bound:
                    return False
        return True

    def _enabled(self, e, clocks, val) -> bool:
        if not eval_guard(e.guard, val):
            return False
        return all(c.contains(clocks[self.clock_ix[c.clock]]) for c in e.clock_guard)

    def _fire(self, s: ExplorationState, moves) -> ExplorationState | None:
        locs = list(s.locs)
        clocks = list(s.clocks)
        sets = s.sets
        done = s.done
        for a, k in moves:
            e = self.nta.automata[a].edges[k]
            locs[a] = e.target
            for c in e.resets:
                clocks[self.clock_ix[c]] = 0
            if e.effects:
                sets = apply_effects(sets, e.effects)
            if e.action is not None:
                done = done | {e.action.flag}
        locs_t, clocks_t = tuple(locs), tuple(clocks)
        if not self.invariants_hold(locs_t, clocks_t):
            return None
        return ExplorationState(locs_t, clocks_t, s.vars, sets, done)

    def _label(self, moves) -> str:
        parts = []
        for a, k in moves:
            e = self.edge(a, k)
            text = f"{self.names[a]}: {e.source} -> {e.target}"
            lab = e.label()
            parts.append(f"{text} [{lab}]" if lab else text)
        return "; ".join(parts)

    def successors(self, s: ExplorationState) -> list[tuple[Step, ExplorationState]]:
        val = self.valuation(s)
        out: list[tuple[Step, ExplorationState]] = []
        urgent = False
        senders: dict[str, list[tuple[int, int]]] = {}
        receivers: dict[str, list[tuple[int, int]]] = {}
        for a, loc in enumerate(s.locs):
            for k in self.out[a][loc]:
                e = self.nta.automata[a].edges[k]
                if not self._enabled(e, s.clocks, val):
                    continue
                if e.sync is not None:
                    table = senders if e.sync.direction == "send" else receivers
                    table.setdefault(e.sync.channel, []).append((a, k))
                    continue
                if e.urgent:
                    urgent = True
                t = self._fire(s, ((a, k),))
                if t is not None:
                    out.append((Step("edge", ((a, k),), self._label(((a, k),))), t))
        for ch, sends in senders.items():
            for snd in sends:
                for rcv in receivers.get(ch, ()):
                    if snd[0] == rcv[0]:
                        continue
                    if self.nta.channels.get(ch, False):
                        urgent = True
                    moves = (snd, rcv)
                    t = self._fire(s, moves)
                    if t is not None:
                        out.append((Step("sync", moves, f"{ch}: " + self._label(moves)), t))
        if not urgent:
            clocks = tuple(min(c + 1, self.cap) for c in s.clocks)
            if self.invariants_hold(s.locs, clocks):
                out.append((DELAY, ExplorationState(s.locs, clocks, s.vars, s.sets, s.done)))
        return out

    def describe(self, s: ExplorationState) -> str:
        locs = ", ".join(f"{n}.{l}" for n, l in zip(self.names, s.locs))
        clocks = " ".join(f"{c}={v}" for c, v in zip(self.clock_names, s.clocks))
        vars_ = " ".join(f"{v}={x}" for v, x in zip(self.var_names, s.vars))
        text = f"({locs}) {clocks}"
        if vars_:
            text += f" {vars_}"
        text += f" {s.sets}"
        if s.done:
            text += " done=" + ",".join(sorted(s.done))
        return text

    def state_dict(self, s: ExplorationState) -> dict:
        return {
            "locations": dict(zip(self.names, s.locs)),
            "clocks": self.clock_values(s),
            "variables": self.valuation(s),
            "V": sorted(s.sets.V),
            "S": sorted(s.sets.S),
            "P": sorted(s.sets.P),
            "done": sorted(s.done),
        }


@dataclass
class StateGraph:
    semantics: Semantics
    states: list[ExplorationState]
    index: dict
    succ: list[list[tuple[Step, int]]]
    parent: list[tuple[int, Step] | None]
    expanded: list[bool]
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.states)

    def is_terminal(self, i: int) -> bool:
        """No step leads anywhere but back to the state itself."""
        return self.expanded[i] and all(t == i for _, t in self.succ[i])

    def terminals(self) -> list[int]:
        return [i for i in range(len(self.states)) if self.is_terminal(i)]

    def path_to(self, i: int) -> list[tuple[Step, int]]:
        """BFS-tree path from the initial state: ``[(step_into, state), ...]``."""
        path = []
        while self.parent[i] is not None:
            j, step = self.parent[i]
            path.append((step, i))
            i = j
        path.reverse()
        return path

    def predecessors(self) -> list[set[int]]:
        pred: list[set[int]] = [set() for _ in self.states]
        for i, edges in enumerate(self.succ):
            for _, t in edges:
                pred[t].add(i)
        return pred


_WORKER: Semantics | None = None


def _init_worker(nta: Nta, extra: tuple[int, ...]) -> None:
    global _WORKER
    _WORKER = Semantics(nta, extra)


def _expand_chunk(chunk: list[ExplorationState]):
    assert _WORKER is not None
    return [_WORKER.successors(s) for s in chunk]


def explore(
    nta: Nta | Semantics,
    budget: int = 1_000_000,
    extra_constants: Iterable[int] = (),
    jobs: int = 1,
) -> StateGraph:
    """Breadth-first reachability with deduplication on the full state.

    Stops adding states once ``budget`` states are known and sets
    ``truncated``. With ``jobs > 1`` each BFS layer is expanded by a process
    pool; results are merged in layer order, so the graph is identical for
    any worker count.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    sem = nta if isinstance(nta, Semantics) else Semantics(nta, extra_constants)
    init = sem.initial()
    g = StateGraph(sem, [init], {init: 0}, [[]], [None], [False])
    layer = [0]
    pool = None
    if jobs > 1:
        pool = ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(sem.nta, (sem.ceiling,)))
    try:
        while layer:
            states = [g.states[i] for i in layer]
            if pool is None:
                results = [sem.successors(s) for s in states]
            else:
                size = max(1, len(states) // (jobs * 4))
                chunks = [states[k : k + size] for k in range(0, len(states), size)]
                results = [r for part in pool.map(_expand_chunk, chunks) for r in part]
            nxt = []
            for i, succ in zip(layer, results):
                edges = []
                complete = True
                for step, t in succ:
                    j = g.index.get(t)
                    if j is None:
                        if len(g.states) >= budget:
                            g.truncated = True
                            complete = False
                            continue
                        j = len(g.states)
                        g.index[t] = j
                        g.states.append(t)
                        g.succ.append([])
                        g.parent.append((i, step))
                        g.expanded.append(False)
                        nxt.append(j)
                    edges.append((step, j))
                g.succ[i] = edges
                g.expanded[i] = complete
            layer = nxt
    finally:
        if pool is not None:
            pool.shutdown()
    return g


def replay(sem: Semantics, steps: Iterable[Step]) -> ExplorationState:
    """Re-execute ``steps`` from the initial state; raises if one is not enabled."""
    s = sem.initial()
    for step in steps:
        for cand, t in sem.successors(s):
            if cand == step:
                s = t
                break
        else:
            raise ValueError(f"step {step.label or step.kind} is not enabled in {sem.describe(s)}")
    return s
