"""UPPAAL 4 flat XML and query-file emission."""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET

from ..errors import ModelError, NameCollisionAfterSanitize
from ..frontend.syntax import DeonticKind
from ..nta import EffectKind, Nta, require_wellformed
from ..temporal import ClockInterval, ClockPoint
from ..explorer.query import BinOp, Cmp, Const, Done, Loc, Not, Query, SetAtom, bind, parse_query, resolve_node
from ..explorer.semantics import Semantics

URGENT_TEMPLATE = "Urgent"
URGENT_CHANNEL = "urg_edge"
DOCTYPE = (
    "<!DOCTYPE nta PUBLIC '-//Uppaal Team//DTD Flat System 1.1//EN' "
    "'http://www.it.uu.se/research/group/darts/uppaal/flat-1_1.dtd'>"
)
KEYWORDS = frozenset(
    """
    chan clock bool int urgent broadcast const commit committed init process state system trans
    guard sync assign select true false for while do if else return typedef struct rate before_update
    after_update meta priority progress imply and or not forall exists sum deadlock default switch
    case break continue void double hybrid scalar string inline
    """.split()
)
SPACING = 160
PER_ROW = 5


def sanitize(name: str) -> str:
    out = re.sub(r"[^A-Za-z0-9_]", "_", name)
    if not out or out[0].isdigit():
        out = "_" + out
    return out


class _Names:
    """Registry of global identifiers; refuses clashes and reserved words."""

    def __init__(self):
        self.owner: dict[str, str] = {}

    def claim(self, name: str, what: str) -> str:
        ident = sanitize(name)
        if ident in KEYWORDS:
            raise NameCollisionAfterSanitize(f"{what} {name!r} is a reserved UPPAAL word")
        prev = self.owner.get(ident)
        if prev is not None and prev != what:
            raise NameCollisionAfterSanitize(f"{what} and {prev} both become {ident!r}")
        self.owner[ident] = what
        return ident


def clause_constants(nta: Nta) -> tuple[dict[str, int], dict[str, int]]:
    """Array indices: V/S over obligations and prohibitions, P over permissions."""
    vs = sorted(c for c, k in nta.clause_index.items() if k is not DeonticKind.PERMISSION)
    ps = sorted(c for c, k in nta.clause_index.items() if k is DeonticKind.PERMISSION)
    return {c: i for i, c in enumerate(vs)}, {c: i for i, c in enumerate(ps)}


def _flags(nta: Nta) -> list[str]:
    return sorted({e.action.flag for a in nta.automata for e in a.edges if e.action is not None})


def _clock_text(c) -> str:
    if isinstance(c, ClockPoint):
        return f"{c.clock} == {c.value}"
    assert isinstance(c, ClockInterval)
    parts = []
    if c.lower:
        parts.append(f"{c.clock} >= {c.lower}")
    if c.upper is not None:
        parts.append(f"{c.clock} <= {c.upper}")
    return " && ".join(parts)


def _atom_text(a) -> str:
    lhs = a.var if a.other is None else f"{a.var} - {a.other}"
    return f"{lhs} {a.op} {a.value}"


def _declarations(nta: Nta, names: _Names) -> str:
    vs, ps = clause_constants(nta)
    lines = ["// clocks", "clock " + ", ".join(names.claim(c, f"clock {c}") for c in nta.clocks) + ";"]
    if nta.variables:
        lines.append("// contract variables")
        for v, init in nta.variables.items():
            lines.append(f"int {names.claim(v, f'variable {v}')} = {init};")
    lines.append("// channels")
    names.claim(URGENT_CHANNEL, "urgent helper channel")
    lines.append(f"urgent chan {URGENT_CHANNEL};")
    for ch in sorted(nta.channels, key=_natural):
        kw = "urgent chan" if nta.channels[ch] else "chan"
        lines.append(f"{kw} {names.claim(ch, f'channel {ch}')};")
    flags = _flags(nta)
    if flags:
        lines.append("// performed actions")
        for f in flags:
            lines.append(f"bool {names.claim(f, f'action flag {f}')} = false;")
    if vs:
        lines.append("// violation and satisfaction sets")
        for c, i in vs.items():
            lines.append(f"const int {names.claim(c, f'clause {c}')} = {i};")
        lines.append(f"bool V[{len(vs)}];")
        lines.append(f"bool S[{len(vs)}];")
    if ps:
        lines.append("// permission set")
        for c, i in ps.items():
            lines.append(f"const int {names.claim(c, f'clause {c}')} = {i};")
        lines.append(f"bool P[{len(ps)}];")
    return "\n".join(lines) + "\n"


def _natural(s: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s)]


def _pos(k: int) -> tuple[int, int]:
    return (k % PER_ROW) * SPACING, (k // PER_ROW) * SPACING


def _label(parent, kind: str, text: str, x: int, y: int) -> None:
    el = ET.SubElement(parent, "label", kind=kind, x=str(x), y=str(y))
    el.text = text


def _template(nta: Nta, a, names: _Names, counter: list[int]) -> ET.Element:
    tpl = ET.Element("template")
    ET.SubElement(tpl, "name").text = names.claim(a.name, f"automaton {a.name}")
    ET.SubElement(tpl, "declaration").text = ""
    local: dict[str, str] = {}
    seen: dict[str, str] = {}
    coords: dict[str, tuple[int, int]] = {}
    for k, node in enumerate(a.nodes):
        ident = sanitize(node.id)
        if ident in KEYWORDS or ident in seen:
            raise NameCollisionAfterSanitize(
                f"{a.name}: node {node.id!r} clashes with {seen.get(ident, 'a reserved word')!r} as {ident!r}"
            )
        seen[ident] = node.id
        lid = f"id{counter[0]}"
        counter[0] += 1
        local[node.id] = lid
        x, y = coords[node.id] = _pos(k)
        loc = ET.SubElement(tpl, "location", id=lid, x=str(x), y=str(y))
        name = ET.SubElement(loc, "name", x=str(x - 20), y=str(y - 30))
        name.text = ident
        bounds = a.invariants.get(node.id)
        if bounds:
            inv = " && ".join(f"{c} <= {b}" for c, b in sorted(bounds.items()))
            _label(loc, "invariant", inv, x - 20, y + 15)
    ET.SubElement(tpl, "init", ref=local[a.initial])
    vs, ps = clause_constants(nta)
    for e in a.edges:
        if e.urgent and e.sync is not None:
            raise ModelError(f"{a.name}: urgent edge {e.source}->{e.target} already synchronizes")
        tr = ET.SubElement(tpl, "transition")
        ET.SubElement(tr, "source", ref=local[e.source])
        ET.SubElement(tr, "target", ref=local[e.target])
        (x1, y1), (x2, y2) = coords[e.source], coords[e.target]
        mx, my = (x1 + x2) // 2, (y1 + y2) // 2
        conds = [_atom_text(g) for g in e.guard.conjuncts]
        conds += [t for t in (_clock_text(c) for c in e.clock_guard) if t]
        if conds:
            _label(tr, "guard", " && ".join(conds), mx, my - 15)
        if e.sync is not None:
            _label(tr, "synchronisation", str(e.sync), mx, my)
        elif e.urgent:
            _label(tr, "synchronisation", f"{URGENT_CHANNEL}!", mx, my)
        updates = []
        if e.action is not None:
            updates.append(f"{e.action.flag} = true")
        updates += [f"{c} = 0" for c in e.resets]
        for eff in e.effects:
            if eff.kind is EffectKind.ADD_PERMISSION:
                updates.append(f"P[{eff.clause}] = true")
            elif eff.kind is EffectKind.ADD_SATISFACTION:
                updates.append(f"S[{eff.clause}] = true")
            elif eff.kind is EffectKind.ADD_VIOLATION:
                updates.append(f"V[{eff.clause}] = true")
            else:
                updates.append(f"V[{eff.clause}] = false")
        if updates:
            _label(tr, "assignment", ", ".join(updates), mx, my + 15)
    return tpl


def _urgent_template(counter: list[int]) -> ET.Element:
    tpl = ET.Element("template")
    ET.SubElement(tpl, "name").text = URGENT_TEMPLATE
    ET.SubElement(tpl, "declaration").text = ""
    lid = f"id{counter[0]}"
    counter[0] += 1
    loc = ET.SubElement(tpl, "location", id=lid, x="0", y="0")
    ET.SubElement(loc, "name", x="-20", y="-30").text = "idle"
    ET.SubElement(tpl, "init", ref=lid)
    tr = ET.SubElement(tpl, "transition")
    ET.SubElement(tr, "source", ref=lid)
    ET.SubElement(tr, "target", ref=lid)
    _label(tr, "synchronisation", f"{URGENT_CHANNEL}?", 40, -40)
    ET.SubElement(tr, "nail", x="60", y="-30")
    ET.SubElement(tr, "nail", x="60", y="30")
    return tpl


def translate_query(nta: Nta, query: Query | str) -> str:
    """Render a query in UPPAAL syntax, resolving node suffixes to full names."""
    if isinstance(query, str):
        query = parse_query(query)
    sem = Semantics(nta)

    def expr(e) -> str:
        if isinstance(e, Const):
            return str(e)
        if isinstance(e, Loc):
            a, node = resolve_node(sem, e)
            return f"{sanitize(sem.names[a])}.{sanitize(node)}"
        if isinstance(e, Cmp):
            return str(e)
        if isinstance(e, SetAtom):
            return f"{e.which}[{e.clause}] == {'true' if e.expected else 'false'}"
        if isinstance(e, Done):
            return f"{e.flag} == {'true' if e.expected else 'false'}"
        if isinstance(e, Not):
            return f"!({expr(e.arg)})"
        assert isinstance(e, BinOp)
        op = {"and": "&&", "or": "||", "imply": "imply"}[e.op]
        return f"({expr(e.left)} {op} {expr(e.right)})"

    bind(query.expr, sem)
    if query.target is not None:
        bind(query.target, sem)
        return f"{expr(query.expr)} --> {expr(query.target)}"
    return f"{query.kind} {expr(query.expr)}"


def to_uppaal_xml(nta: Nta, queries=()) -> tuple[str, str]:
    """Return ``(model_xml, query_file)`` for ``nta``."""
    require_wellformed(nta)
    names = _Names()
    root = ET.Element("nta")
    ET.SubElement(root, "declaration").text = _declarations(nta, names)
    counter = [0]
    for a in nta.automata:
        root.append(_template(nta, a, names, counter))
    names.claim(URGENT_TEMPLATE, "urgent helper automaton")
    root.append(_urgent_template(counter))
    procs = ", ".join([sanitize(a.name) for a in nta.automata] + [URGENT_TEMPLATE])
    ET.SubElement(root, "system").text = f"system {procs};\n"
    ET.indent(root, space="  ")
    body = ET.tostring(root, encoding="unicode")
    xml = f'<?xml version="1.0" encoding="utf-8"?>\n{DOCTYPE}\n{body}\n'
    q_lines = []
    for q in queries:
        text = q if isinstance(q, str) else str(q)
        q_lines.append(f"/*\n{text}\n*/")
        q_lines.append(translate_query(nta, q))
    return xml, ("\n".join(q_lines) + "\n") if q_lines else ""
