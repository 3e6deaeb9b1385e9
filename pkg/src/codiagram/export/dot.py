"""Graphviz rendering of a network for inspection."""
from __future__ import annotations

from ..nta import Nta


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _node_label(node) -> str:
    if not (node.annot_V or node.annot_S or node.annot_P):
        return node.id
    parts = [",".join(sorted(x)) for x in (node.annot_V, node.annot_S, node.annot_P)]
    return node.id + "\n{" + " | ".join(parts) + "}"


def to_dot(nta: Nta) -> str:
    lines = [f"digraph {_q(nta.name)} {{", "  rankdir=LR;", '  node [shape=circle, fontsize=10];',
             "  edge [fontsize=9];"]
    for a in nta.automata:
        lines.append(f"  subgraph {_q('cluster_' + a.name)} {{")
        lines.append(f"    label={_q(a.name)};")
        for node in a.nodes:
            attrs = [f"label={_q(_node_label(node))}"]
            bounds = a.invariants.get(node.id)
            if bounds:
                inv = ", ".join(f"{c}<={b}" for c, b in sorted(bounds.items()))
                attrs.append(f"xlabel={_q(inv)}")
            if node.id == a.initial:
                attrs.append("peripheries=2")
            lines.append(f"    {_q(a.name + '/' + node.id)} [{', '.join(attrs)}];")
        for e in a.edges:
            attrs = [f"label={_q(e.label())}"]
            if e.urgent:
                attrs.append("arrowhead=empty")
            lines.append(f"    {_q(a.name + '/' + e.source)} -> {_q(a.name + '/' + e.target)} [{', '.join(attrs)}];")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
