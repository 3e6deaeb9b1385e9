"""Structural checker for UPPAAL 4 flat-format model files."""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET

LABEL_KINDS = {"invariant", "guard", "synchronisation", "assignment", "select", "comments"}
IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
BUILTIN = {"true", "false", "imply", "and", "or", "not"}


def _declared(text: str) -> dict[str, str]:
    """Map each global identifier to its declared type."""
    out: dict[str, str] = {}
    for stmt in re.sub(r"//[^\n]*", "", text).split(";"):
        stmt = stmt.strip()
        if not stmt:
            continue
        m = re.match(r"(urgent chan|chan|clock|bool|int|const int)\s+(.*)", stmt, re.S)
        if m is None:
            raise ValueError(f"unrecognized declaration {stmt!r}")
        kind, rest = m.groups()
        for item in rest.split(","):
            name = IDENT.match(item.strip())
            if name is None:
                raise ValueError(f"bad declarator {item!r}")
            out[name.group()] = kind + ("[]" if "[" in item else "")
    return out


def check_uppaal_document(xml: str) -> list[str]:
    """Problems found in ``xml``; empty when the document is well formed."""
    problems: list[str] = []
    lines = xml.split("\n", 2)
    if not lines[0].startswith("<?xml") or "flat-1_1.dtd" not in lines[1]:
        problems.append("missing XML prolog or flat-1_1 doctype")
    try:
        root = ET.fromstring(lines[2])
    except ET.ParseError as exc:
        return [f"not well-formed XML: {exc}"]
    if root.tag != "nta":
        return ["root element is not <nta>"]
    tags = [c.tag for c in root]
    if not tags or tags[0] != "declaration" or tags[-1] != "system":
        problems.append(f"unexpected top-level layout {tags}")
    if any(t not in ("declaration", "template", "system", "queries") for t in tags):
        problems.append(f"unknown top-level element in {tags}")
    try:
        globals_ = _declared(root.findtext("declaration") or "")
    except ValueError as exc:
        return problems + [str(exc)]
    templates = root.findall("template")
    names = [t.findtext("name") for t in templates]
    ids: set[str] = set()
    for tpl in templates:
        tname = tpl.findtext("name")
        locs = {}
        for loc in tpl.findall("location"):
            lid = loc.get("id")
            if lid in ids:
                problems.append(f"{tname}: duplicate location id {lid}")
            ids.add(lid)
            if loc.get("x") is None or loc.get("y") is None:
                problems.append(f"{tname}: location {lid} lacks coordinates")
            lname = loc.findtext("name")
            if lname is None or not IDENT.fullmatch(lname):
                problems.append(f"{tname}: bad location name {lname!r}")
            locs[lid] = lname
            for lab in loc.findall("label"):
                if lab.get("kind") != "invariant":
                    problems.append(f"{tname}: location label kind {lab.get('kind')}")
        if len(set(locs.values())) != len(locs):
            problems.append(f"{tname}: location names are not unique")
        init = tpl.find("init")
        if init is None or init.get("ref") not in locs:
            problems.append(f"{tname}: init does not reference a location")
        for tr in tpl.findall("transition"):
            src, dst = tr.find("source"), tr.find("target")
            if src is None or dst is None or src.get("ref") not in locs or dst.get("ref") not in locs:
                problems.append(f"{tname}: transition with dangling endpoints")
            syncs = 0
            for lab in tr.findall("label"):
                kind = lab.get("kind")
                if kind not in LABEL_KINDS:
                    problems.append(f"{tname}: label kind {kind!r}")
                text = lab.text or ""
                if kind == "synchronisation":
                    syncs += 1
                    m = re.fullmatch(r"([A-Za-z_]\w*)([!?])", text)
                    if m is None or not globals_.get(m.group(1), "").endswith("chan"):
                        problems.append(f"{tname}: bad synchronisation {text!r}")
                for word in IDENT.findall(text):
                    if word not in globals_ and word not in BUILTIN:
                        problems.append(f"{tname}: undeclared identifier {word!r} in {text!r}")
            if syncs > 1:
                problems.append(f"{tname}: transition with {syncs} synchronisations")
    system = (root.findtext("system") or "").strip()
    m = re.fullmatch(r"system\s+(.*);", system)
    if m is None or [s.strip() for s in m.group(1).split(",")] != names:
        problems.append(f"system line {system!r} does not list the templates {names}")
    return problems
