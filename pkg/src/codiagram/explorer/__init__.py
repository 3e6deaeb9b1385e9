from .query import (
    BinOp,
    Cmp,
    Const,
    Done,
    Loc,
    Not,
    Query,
    SetAtom,
    Trace,
    Verdict,
    bind,
    check,
    evaluate,
    parse_query,
    replay_trace,
)
from .rank import RankClass, format_ranking, rank_terminals
from .semantics import (
    DELAY,
    ExplorationState,
    Semantics,
    StateGraph,
    Step,
    explore,
    replay,
)

__all__ = [
    "BinOp", "Cmp", "Const", "DELAY", "Done", "ExplorationState", "Loc", "Not", "Query",
    "RankClass", "Semantics", "SetAtom", "StateGraph", "Step", "Trace", "Verdict", "bind",
    "check", "evaluate", "explore", "format_ranking", "parse_query", "rank_terminals",
    "replay", "replay_trace",
]


def initial_state(nta):
    return Semantics(nta).initial()


def successors(nta, state):
    return Semantics(nta).successors(state)
