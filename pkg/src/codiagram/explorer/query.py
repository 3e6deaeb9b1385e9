"""Query language (``E<> e``, ``A[] e``, ``p --> q``) and its evaluation."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable

from ..errors import BudgetExceeded, QuerySyntaxError, UnresolvedName
from ..frontend.syntax import DeonticKind, compare
from ..nta import Nta
from .semantics import ExplorationState, Semantics, StateGraph, Step, explore


# -- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Loc:
    automaton: str
    node: str

    def __str__(self):
        return f"{self.automaton}.{self.node}"


@dataclass(frozen=True)
class Cmp:
    """``name op n`` or ``name - other op n`` over clocks or variables."""

    name: str
    op: str
    value: int
    other: str | None = None

    def __str__(self):
        lhs = self.name if self.other is None else f"{self.name} - {self.other}"
        return f"{lhs} {self.op} {self.value}"


@dataclass(frozen=True)
class SetAtom:
    which: str  # "V" | "S" | "P"
    clause: str
    expected: bool = True

    def __str__(self):
        return f"{self.which}[{self.clause}] == {'true' if self.expected else 'false'}"


@dataclass(frozen=True)
class Done:
    agent: str
    action: str
    expected: bool = True

    @property
    def flag(self) -> str:
        return f"{self.agent}_{self.action}"

    def __str__(self):
        return f"done[{self.agent}.{self.action}] == {'true' if self.expected else 'false'}"


@dataclass(frozen=True)
class Not:
    arg: "Expr"

    def __str__(self):
        return f"not ({self.arg})"


@dataclass(frozen=True)
class BinOp:
    op: str  # "and" | "or" | "imply"
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


Expr = Const | Loc | Cmp | SetAtom | Done | Not | BinOp


@dataclass(frozen=True)
class Query:
    kind: str  # "E<>" | "A[]" | "-->"
    expr: Expr
    target: Expr | None = None

    def __str__(self):
        if self.kind == "-->":
            return f"{self.expr} --> {self.target}"
        return f"{self.kind} {self.expr}"

    def atoms(self) -> list:
        out: list = []

        def walk(e):
            if isinstance(e, Not):
                walk(e.arg)
            elif isinstance(e, BinOp):
                walk(e.left)
                walk(e.right)
            else:
                out.append(e)

        walk(self.expr)
        if self.target is not None:
            walk(self.target)
        return out


# -- parser ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<tok>E<>|A\[\]|-->|==|!=|<=|>=|&&|\|\||[<>!()\[\].\-=])|(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*))"
)
_WORDS = {"and": "&&", "or": "||", "not": "!", "imply": "imply"}


def _lex(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise QuerySyntaxError(f"unexpected character {text[col]!r} at column {col + 1}")
        if m.group("tok"):
            t = m.group("tok")
            toks.append(("==" if t == "=" else t, t, m.start("tok")))
        elif m.group("num"):
            toks.append(("num", m.group("num"), m.start("num")))
        else:
            word = m.group("id")
            toks.append((_WORDS.get(word, "id"), word, m.start("id")))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _QueryParser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0

    def peek(self, k: int = 0) -> str:
        return self.toks[min(self.i + k, len(self.toks) - 1)][0]

    def take(self, kind: str | None = None) -> str:
        tok, text, pos = self.toks[self.i]
        if kind is not None and tok != kind:
            shown = text or "end of query"
            raise QuerySyntaxError(f"expected {kind} but found {shown!r} at column {pos + 1}")
        self.i += 1
        return text

    def query(self) -> Query:
        if self.peek() in ("E<>", "A[]"):
            kind = self.take()
            q = Query(kind, self.expr())
        else:
            p = self.expr()
            self.take("-->")
            q = Query("-->", p, self.expr())
        self.take("eof")
        return q

    def expr(self):
        left = self.disj()
        while self.peek() == "imply":
            self.take()
            left = BinOp("imply", left, self.disj())
        return left

    def disj(self):
        left = self.conj()
        while self.peek() == "||":
            self.take()
            left = BinOp("or", left, self.conj())
        return left

    def conj(self):
        left = self.unary()
        while self.peek() == "&&":
            self.take()
            left = BinOp("and", left, self.unary())
        return left

    def unary(self):
        if self.peek() == "!":
            self.take()
            return Not(self.unary())
        return self.primary()

    def _truth(self) -> bool:
        if self.peek() in ("==", "!="):
            negate = self.take() == "!="
            word = self.take("id")
            if word not in ("true", "false"):
                raise QuerySyntaxError(f"expected true or false, found {word!r}")
            return (word == "true") != negate
        return True

    def primary(self):
        kind = self.peek()
        if kind == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if kind == "num":
            raise QuerySyntaxError("a comparison must start with a clock or variable name")
        name = self.take("id")
        if name in ("true", "false"):
            return Const(name == "true")
        if name in ("V", "S", "P") and self.peek() == "[":
            self.take()
            clause = self.take("id")
            self.take("]")
            return SetAtom(name, clause, self._truth())
        if name == "done" and self.peek() == "[":
            self.take()
            agent = self.take("id")
            self.take(".")
            action = self.take("id")
            self.take("]")
            return Done(agent, action, self._truth())
        if self.peek() == ".":
            parts = []
            while self.peek() == ".":
                self.take()
                parts.append(self.take("id"))
            return Loc(name, ".".join(parts))
        other = None
        if self.peek() == "-":
            self.take()
            other = self.take("id")
        op = self.peek()
        if op not in ("<", "<=", "==", "!=", ">=", ">"):
            raise QuerySyntaxError(f"expected a comparison operator after {name!r}")
        self.take()
        return Cmp(name, op, int(self.take("num")), other)


def parse_query(text: str) -> Query:
    return _QueryParser(text).query()


# -- binding ---------------------------------------------------------------

Pred = Callable[[ExplorationState], bool]


def resolve_node(sem: Semantics, loc: Loc) -> tuple[int, str]:
    try:
        a = sem.names.index(loc.automaton)
    except ValueError:
        raise UnresolvedName(f"no automaton named {loc.automaton!r}") from None
    ids = sem.nta.automata[a].node_ids
    if loc.node in ids:
        return a, loc.node
    hits = [n for n in ids if n.endswith("." + loc.node)]
    if len(hits) == 1:
        return a, hits[0]
    if not hits:
        raise UnresolvedName(f"automaton {loc.automaton} has no node {loc.node!r}")
    raise UnresolvedName(f"node {loc.node!r} is ambiguous in {loc.automaton}: {', '.join(sorted(hits))}")


def _operand(sem: Semantics, name: str) -> Callable[[ExplorationState], int]:
    if name in sem.clock_ix:
        i = sem.clock_ix[name]
        return lambda s: s.clocks[i]
    if name in sem.var_names:
        i = sem.var_names.index(name)
        return lambda s: s.vars[i]
    raise UnresolvedName(f"no clock or variable named {name!r}")


def _actions(nta: Nta) -> set[str]:
    return {e.action.flag for a in nta.automata for e in a.edges if e.action is not None}


def bind(expr: Expr, sem: Semantics) -> Pred:
    """Turn an expression into a state predicate, resolving every name."""
    if isinstance(expr, Const):
        v = expr.value
        return lambda s: v
    if isinstance(expr, Loc):
        a, node = resolve_node(sem, expr)
        return lambda s: s.locs[a] == node
    if isinstance(expr, Cmp):
        lhs = _operand(sem, expr.name)
        op, n = expr.op, expr.value
        if expr.other is not None:
            rhs = _operand(sem, expr.other)
            if op == "!=":
                return lambda s: lhs(s) - rhs(s) != n
            return lambda s: compare(lhs(s) - rhs(s), op, n)
        if op == "!=":
            return lambda s: lhs(s) != n
        return lambda s: compare(lhs(s), op, n)
    if isinstance(expr, SetAtom):
        kind = sem.nta.clause_index.get(expr.clause)
        if kind is None:
            raise UnresolvedName(f"no norm named {expr.clause!r}")
        if (expr.which == "P") != (kind is DeonticKind.PERMISSION):
            raise UnresolvedName(f"{expr.which}[{expr.clause}] does not apply to a {kind.value}")
        which, clause, want = expr.which, expr.clause, expr.expected
        return lambda s: (clause in getattr(s.sets, which)) == want
    if isinstance(expr, Done):
        flag, want = expr.flag, expr.expected
        if flag not in _actions(sem.nta):
            raise UnresolvedName(f"no action {expr.agent}.{expr.action} in the network")
        return lambda s: (flag in s.done) == want
    if isinstance(expr, Not):
        f = bind(expr.arg, sem)
        return lambda s: not f(s)
    if isinstance(expr, BinOp):
        l, r = bind(expr.left, sem), bind(expr.right, sem)
        if expr.op == "and":
            return lambda s: l(s) and r(s)
        if expr.op == "or":
            return lambda s: l(s) or r(s)
        return lambda s: (not l(s)) or r(s)
    raise TypeError(f"not an expression: {expr!r}")


def clock_constants(q: Query, sem_or_nta) -> list[int]:
    clocks = set(sem_or_nta.clocks.clocks) if isinstance(sem_or_nta, Nta) else set(sem_or_nta.clock_names)
    return [
        a.value + (1 if a.op in (">", "!=") else 0)
        for a in q.atoms()
        if isinstance(a, Cmp) and (a.name in clocks or a.other in clocks)
    ]


# -- evaluation ------------------------------------------------------------

@dataclass
class Trace:
    """Alternating states and steps; ``loop_start`` marks a lasso's cycle entry."""

    states: list[ExplorationState]
    steps: list[Step]
    loop_start: int | None = None

    def __len__(self) -> int:
        return len(self.steps)


@dataclass
class Verdict:
    query: Query
    holds: bool
    states_explored: int
    trace: Trace | None = None
    semantics: Semantics | None = field(default=None, repr=False)

    @property
    def label(self) -> str:
        return "SATISFIED" if self.holds else "NOT SATISFIED"

    def trace_text(self) -> str:
        if self.trace is None or self.semantics is None:
            return ""
        sem = self.semantics
        lines = [f"state 0: {sem.describe(self.trace.states[0])}"]
        for k, (step, state) in enumerate(zip(self.trace.steps, self.trace.states[1:]), 1):
            lines.append(f"  step: {step.label}")
            lines.append(f"state {k}: {sem.describe(state)}")
        if self.trace.loop_start is not None:
            lines.append(f"loop back to state {self.trace.loop_start}")
        return "\n".join(lines) + "\n"

    def trace_data(self) -> dict:
        out: dict = {"query": str(self.query), "verdict": self.label, "states_explored": self.states_explored}
        if self.trace is not None and self.semantics is not None:
            sem = self.semantics
            out["states"] = [sem.state_dict(s) for s in self.trace.states]
            out["steps"] = [
                {"kind": st.kind, "moves": [list(m) for m in st.moves], "label": st.label} for st in self.trace.steps
            ]
            out["loop_start"] = self.trace.loop_start
        return out


def _trace_to(g: StateGraph, i: int) -> Trace:
    path = g.path_to(i)
    states = [g.states[0]] + [g.states[j] for _, j in path]
    return Trace(states, [st for st, _ in path])


def _af(g: StateGraph, q: Pred) -> list[bool]:
    """Least fixpoint of ``AF q``: q holds, or every successor is in AF."""
    n = len(g)
    af = [False] * n
    remaining = [len({t for _, t in g.succ[i]}) for i in range(n)]
    pred = g.predecessors()
    work = [i for i in range(n) if q(g.states[i])]
    for i in work:
        af[i] = True
    while work:
        j = work.pop()
        for i in pred[j]:
            if af[i]:
                continue
            remaining[i] -= 1
            if remaining[i] == 0:
                af[i] = True
                work.append(i)
    return af


def _avoiding_run(g: StateGraph, start: int, af: list[bool]) -> tuple[list[tuple[Step, int]], int | None]:
    """Follow non-AF successors from ``start`` until a terminal or a repeat."""
    seen = {start: 0}
    path: list[tuple[Step, int]] = []
    cur = start
    while True:
        nxt = next(((st, t) for st, t in g.succ[cur] if not af[t]), None)
        if nxt is None:
            return path, None
        path.append(nxt)
        cur = nxt[1]
        if cur in seen:
            return path, seen[cur]
        seen[cur] = len(path)


def evaluate(g: StateGraph, query: Query) -> Verdict:
    """Evaluate ``query`` on an already explored graph."""
    sem = g.semantics
    p = bind(query.expr, sem)
    n = len(g)
    if query.kind == "E<>":
        for i in range(n):
            if p(g.states[i]):
                return Verdict(query, True, n, _trace_to(g, i), sem)
        if g.truncated:
            raise BudgetExceeded(n, n)
        return Verdict(query, False, n, None, sem)
    if query.kind == "A[]":
        for i in range(n):
            if not p(g.states[i]):
                return Verdict(query, False, n, _trace_to(g, i), sem)
        if g.truncated:
            raise BudgetExceeded(n, n)
        return Verdict(query, True, n, None, sem)
    assert query.target is not None
    if g.truncated:
        raise BudgetExceeded(n, n)
    q = bind(query.target, sem)
    af = _af(g, q)
    for i in range(n):
        if p(g.states[i]) and not af[i]:
            trace = _trace_to(g, i)
            offset = len(trace.steps)
            tail, loop = _avoiding_run(g, i, af)
            trace.steps.extend(st for st, _ in tail)
            trace.states.extend(g.states[j] for _, j in tail)
            trace.loop_start = None if loop is None else offset + loop
            return Verdict(query, False, n, trace, sem)
    return Verdict(query, True, n, None, sem)


def check(
    nta: Nta,
    query: Query | str,
    budget: int = 1_000_000,
    jobs: int = 1,
) -> Verdict:
    """Explore ``nta`` and decide ``query``.

    Clock constants mentioned in the query raise the saturation ceiling so the
    capped state space still distinguishes them. Raises BudgetExceeded when the
    explored fragment cannot decide the query.
    """
    if isinstance(query, str):
        query = parse_query(query)
    sem = Semantics(nta, clock_constants(query, nta))
    bind(query.expr, sem)
    if query.target is not None:
        bind(query.target, sem)
    g = explore(sem, budget=budget, jobs=jobs)
    try:
        return evaluate(g, query)
    except BudgetExceeded:
        raise BudgetExceeded(len(g), budget) from None


def replay_trace(sem: Semantics, steps: Iterable[Step]) -> list[ExplorationState]:
    """All states visited by re-running ``steps`` from the initial state."""
    s = sem.initial()
    out = [s]
    for step in steps:
        for cand, t in sem.successors(s):
            if cand == step:
                s = t
                break
        else:
            raise ValueError(f"step {step.label or step.kind} is not enabled in {sem.describe(s)}")
        out.append(s)
    return out
