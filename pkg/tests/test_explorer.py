from __future__ import annotations

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from codiagram import compile_contract, parse_contract
from codiagram.errors import BudgetExceeded, QuerySyntaxError, UnresolvedName
from codiagram.explorer import (
    DELAY,
    Semantics,
    bind,
    check,
    explore,
    parse_query,
    rank_terminals,
    replay,
    replay_trace,
)
from codiagram.explorer.query import BinOp, Cmp, Loc, Not, SetAtom
from codiagram.nta import EffectKind
from conftest import compile_named
from strategies import contracts


def single(body: str, prelude: str = ""):
    return compile_contract(parse_contract(f"{prelude} contract k {{ clause N agent ag {{ {body} }} }}"))


def at(sem: Semantics, **locs):
    """The first state (in BFS order) whose locations match ``locs``."""
    g = explore(sem)
    for i, s in enumerate(g.states):
        if all(s.locs[sem.names.index(a)] == n for a, n in locs.items()):
            return g, i
    raise AssertionError(f"no state at {locs}")


def test_initial_state_of_auction():
    sem = Semantics(compile_named("auction"))
    s = sem.initial()
    assert s.locs == ("Check_Item.init", "Check_Item.a2_wait")
    assert s.clocks == (0,) and s.vars == ()
    assert not (s.sets.V or s.sets.S or s.sets.P)


def test_initial_relative_clock_and_variables():
    sem = Semantics(compile_named("office"))
    s = sem.initial()
    assert dict(zip(sem.clock_names, s.clocks)) == {"T": 0, "t_Badge": 0}
    assert sem.valuation(s) == {"level": 2}


def test_action_and_delay_inside_window():
    sem = Semantics(single("within T <= 2; obligation act a;"))
    succ = sem.successors(sem.initial())
    kinds = sorted(step.kind for step, _ in succ)
    assert kinds == ["delay", "edge"]


def test_urgent_edge_blocks_delay():
    sem = Semantics(single("within T <= 2; obligation act a;"))
    g, i = at(sem, A1="N.a_end")
    assert [st.kind for st, _ in g.succ[i]] == ["edge"]
    assert g.succ[i][0][0].moves and sem.edge(*g.succ[i][0][0].moves[0]).urgent


def test_only_timeout_at_deadline():
    sem = Semantics(single("within T <= 1; obligation act a;"))
    g = explore(sem)
    (i,) = [k for k, s in enumerate(g.states) if s.locs[0] == "N.a_init" and s.clocks[0] == 2]
    ((step, j),) = g.succ[i]
    e = sem.edge(*step.moves[0])
    assert e.target == "N.timeout" and g.states[j].sets.V == {"N"}


def test_clocks_saturate_at_ceiling_plus_one():
    nta = single("within T <= 2; obligation act a;")
    g = explore(nta)
    assert nta.ceiling() == 3
    assert max(s.clocks[0] for s in g.states) == 4
    assert all(any(t == i for _, t in g.succ[i]) for i in g.terminals() if g.states[i].clocks[0] == 4)


def test_single_obligation_terminals_have_exactly_one_verdict():
    g = explore(single("within T <= 2; obligation act a;"))
    terms = g.terminals()
    assert terms
    for i in terms:
        s = g.states[i].sets
        assert ("N" in s.S) != ("N" in s.V)


def test_auction_terminal_classes():
    g = explore(compile_named("auction"))
    outcomes = {(frozenset(g.states[i].sets.V), frozenset(g.states[i].sets.S)) for i in g.terminals()}
    assert (frozenset(), frozenset({"Valid_Information", "Inadequate_Item"})) in outcomes
    assert all(v or s == {"Valid_Information", "Inadequate_Item"} for v, s in outcomes)
    levels = [c.level for c in rank_terminals(g)]
    assert levels == [0, 1, 1, 2]


def test_budget_one_truncates():
    g = explore(compile_named("auction"), budget=1)
    assert g.truncated and len(g) == 1 and g.terminals() == []


def test_budget_exceeded_when_inconclusive():
    nta = compile_named("office")
    with pytest.raises(BudgetExceeded):
        check(nta, "A[] true", budget=5)
    assert check(nta, "E<> true", budget=5).holds


def test_parallel_exploration_is_identical():
    nta = compile_named("office")
    a, b = explore(nta), explore(nta, jobs=2)
    assert a.states == b.states
    assert [[t for _, t in s] for s in a.succ] == [[t for _, t in s] for s in b.succ]


def test_auction_leads_to():
    v = check(compile_named("auction"), "A1.timeout and T>1 --> V[Valid_Information]==true")
    assert v.holds and v.label == "SATISFIED" and v.trace is None


def test_always_fails_with_timeout_counterexample():
    nta = single("within T <= 2; obligation act a;")
    v = check(nta, "A[] not V[N]")
    assert not v.holds
    sem = Semantics(nta)
    last = replay(sem, v.trace.steps)
    assert last == v.trace.states[-1]
    assert last.locs[0] == "N.timeout" and "N" in last.sets.V


def test_reachability_witness_performs_action():
    v = check(single("within T <= 2; obligation act a;"), "E<> S[N]")
    assert v.holds
    assert any(st.label and "ag.a" in st.label for st in v.trace.steps)
    assert "done=ag_a" in v.trace_text()


def test_leads_to_counterexample_is_a_lasso_or_dead_end():
    nta = single("obligation act a;")
    v = check(nta, "A1.N.a_init --> S[N]")
    assert not v.holds
    tr = v.trace
    assert tr.loop_start is not None
    assert tr.states[tr.loop_start] == tr.states[-1]
    assert all("N" not in s.sets.S for s in tr.states[tr.loop_start:])
    data = v.trace_data()
    assert data["verdict"] == "NOT SATISFIED" and data["loop_start"] == tr.loop_start


def test_leads_to_counterexample_ends_in_violation():
    nta = single("within T <= 1; obligation act a;")
    v = check(nta, "A1.N.a_init --> S[N]")
    assert not v.holds
    last = v.trace.states[-1]
    assert last.locs[0] == "N.timeout" and last.sets.V == {"N"}


def test_done_atoms_and_clock_differences():
    nta = compile_named("sale")
    assert check(nta, "E<> done[seller.ship] and T - t_Payment >= 1").holds
    assert check(nta, "A[] done[seller.ship] imply done[buyer.pay]").holds


@pytest.mark.parametrize(
    "text, shape",
    [
        ("E<> A1.timeout", ("E<>", Loc("A1", "timeout"))),
        ("A[] !(V[x] && S[x])", ("A[]", Not(BinOp("and", SetAtom("V", "x"), SetAtom("S", "x"))))),
        ("A1.n1 and t1>1 --> V[v]==true", ("-->", BinOp("and", Loc("A1", "n1"), Cmp("t1", ">", 1)))),
        ("E<> V[v] == false", ("E<>", SetAtom("V", "v", False))),
        ("E<> V[v] != true", ("E<>", SetAtom("V", "v", False))),
    ],
)
def test_query_parsing(text, shape):
    q = parse_query(text)
    assert (q.kind, q.expr) == shape


@pytest.mark.parametrize("text", ["", "E<>", "x >", "E<> (a.b", "A[] V[x] == maybe", "E<> 3 < T", "p --> ", "E<> @"])
def test_query_syntax_errors(text):
    with pytest.raises(QuerySyntaxError):
        parse_query(text)


@pytest.mark.parametrize(
    "text",
    ["E<> A9.init", "E<> A1.nowhere", "E<> V[Nobody]", "E<> P[Valid_Information]", "E<> done[seller.zz]", "E<> zz > 1",
     "E<> A1.final"],
)
def test_unresolved_names(text):
    with pytest.raises(UnresolvedName):
        check(compile_named("auction"), text)


def _sets_ok(g):
    for i, edges in enumerate(g.succ):
        s = g.states[i]
        for step, j in edges:
            t = g.states[j]
            assert t.sets.S >= s.sets.S and t.sets.P >= s.sets.P
            if step is not DELAY and not any(
                x.kind is EffectKind.CLEAR_VIOLATION
                for a, k in step.moves for x in g.semantics.edge(a, k).effects
            ):
                assert t.sets.V >= s.sets.V
        assert not (s.sets.V & s.sets.S)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(contracts(), st.data())
def test_generated_contracts_explore_soundly(c, data):
    nta = compile_contract(c)
    sem = Semantics(nta)
    g = explore(sem, budget=200_000)
    assert not g.truncated
    _sets_ok(g)
    clause = data.draw(st.sampled_from(sorted(nta.clause_index)))
    which = "P" if nta.clause_index[clause].value == "permission" else data.draw(st.sampled_from("VS"))
    q = parse_query(f"E<> {which}[{clause}]")
    v = check(nta, q)
    if v.holds:
        states = replay_trace(sem, v.trace.steps)
        assert states == v.trace.states
        assert bind(q.expr, sem)(states[-1])


def test_corpus_terminals_are_reached_and_sets_disjoint(corpus_file):
    g = explore(compile_contract(parse_contract(corpus_file.read_text())))
    assert g.terminals() and not g.truncated
    _sets_ok(g)
