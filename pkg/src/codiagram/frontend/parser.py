"""Recursive-descent parser for the textual contract language.

Grammar (keywords in quotes)::

    file      := header* "contract" IDENT "{" (clause | content) "}"
    header    := "unit" IDENT ";" | "vars" "{" (IDENT "=" NAT ";")* "}"
    clause    := "clause" IDENT ("agent" IDENT)? "{" content "}"
    content   := opts (norm | acttree ";"?)
    opts      := ("when" guard ";")? ("within" trestr ";")?
    norm      := ("agent" IDENT)? deon acttree ("reparation" (clause | "{" content "}"))? ";"
    deon      := "obligation" | "permission" | "prohibition"
    acttree   := "act" IDENT | ("and" | "or" | "seq") "{" clause (","? clause)+ "}"
    guard     := vatom ("and" vatom)*       vatom := IDENT ("-" IDENT)? OP NAT
    trestr    := catom ("and" catom)*       catom := cref ("-" cref)? OP NAT
    cref      := "T" | "after" "(" IDENT ")"

The parser accepts a superset of well-formed contracts (for instance a
deontic norm nested below another one); the validator reports those.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ContractSyntaxError, Diagnostic
from .syntax import (
    ABSOLUTE_CLOCK,
    Atomic,
    Box,
    ClockAtom,
    ClockRef,
    Contract,
    Deontic,
    DeonticKind,
    Guard,
    Refinement,
    RefinementKind,
    TimeRestriction,
    VarAtom,
)

KEYWORDS = frozenset(
    {
        "unit", "vars", "contract", "clause", "agent", "when", "within",
        "obligation", "permission", "prohibition", "act", "and", "or", "seq",
        "reparation", "after",
    }
)

_OP_ALIASES = {"=": "==", "==": "==", "<=": "<=", "≤": "<=", ">=": ">=", "≥": ">=", "<": "<", ">": ">"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*|\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<nat>[0-9]+)
  | (?P<op><=|>=|==|≤|≥|<|>|=)
  | (?P<punct>[{}();,\-])
    """,
    re.VERBOSE,
)

MAX_DEPTH = 200


@dataclass(frozen=True)
class Token:
    kind: str  # ident | nat | op | punct | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ContractSyntaxError(
                [Diagnostic(line, col, "E001", f"unexpected character {text[pos]!r}")]
            )
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0
        self.depth = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("ident", "punct", "op") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def fail(self, expected: str, code: str = "E002") -> ContractSyntaxError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return ContractSyntaxError([Diagnostic(t.line, t.col, code, f"expected {expected}, found {found}")])

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.fail(repr(text))
        return self.advance()

    def ident(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.fail(what)
        return self.advance().text

    def nat(self) -> int:
        if self.tok.kind != "nat":
            raise self.fail("natural number")
        return int(self.advance().text)

    def op(self) -> str:
        if self.tok.kind != "op":
            raise self.fail("comparison operator (<=, <, ==, >, >=)")
        return _OP_ALIASES[self.advance().text]

    # -- grammar -------------------------------------------------------
    def file(self) -> Contract:
        unit = None
        variables: dict[str, int] = {}
        while self.at("unit", "vars"):
            if self.advance().text == "unit":
                unit = self.ident("unit name")
                self.expect(";")
            else:
                self.expect("{")
                while not self.at("}"):
                    t = self.tok
                    name = self.ident("variable name")
                    if name in variables:
                        raise ContractSyntaxError(
                            [Diagnostic(t.line, t.col, "E003", f"variable {name!r} declared twice")]
                        )
                    self.expect("=")
                    variables[name] = self.nat()
                    self.expect(";")
                self.expect("}")
        self.expect("contract")
        name = self.ident("contract name")
        self.expect("{")
        if self.at("clause"):
            root = self.clause()
        else:
            root = self.content(name, None)
        self.expect("}")
        if self.tok.kind != "eof":
            raise self.fail("end of input")
        return Contract(name=name, root=root, unit=unit, variables=tuple(variables.items()))

    def clause(self) -> Box:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.fail(f"at most {MAX_DEPTH} nested clauses", code="E006")
        self.expect("clause")
        name = self.ident("clause name")
        agent = None
        if self.at("agent"):
            self.advance()
            agent = self.ident("agent name")
        self.expect("{")
        box = self.content(name, agent)
        self.expect("}")
        self.depth -= 1
        return box

    def content(self, name: str, agent: str | None) -> Box:
        guard = Guard()
        trestr = TimeRestriction()
        if self.at("when"):
            self.advance()
            guard = self.guard()
            self.expect(";")
        if self.at("within"):
            self.advance()
            trestr = self.trestr()
            self.expect(";")
        reparation = None
        if self.at("agent", "obligation", "permission", "prohibition"):
            if self.at("agent"):
                t = self.advance()
                if agent is not None:
                    raise ContractSyntaxError(
                        [Diagnostic(t.line, t.col, "E005", f"agent of clause {name!r} given twice")]
                    )
                agent = self.ident("agent name")
            if not self.at("obligation", "permission", "prohibition"):
                raise self.fail("'obligation', 'permission' or 'prohibition'")
            kind = DeonticKind(self.advance().text)
            body = Deontic(kind, self.acttree())
            if self.at("reparation"):
                self.advance()
                if self.at("clause"):
                    reparation = self.clause()
                else:
                    self.expect("{")
                    reparation = self.content(f"{name}_reparation", None)
                    self.expect("}")
            self.expect(";")
        elif self.at("act", "and", "or", "seq"):
            body = self.acttree()
            if self.at(";"):
                self.advance()
        else:
            raise self.fail("a norm, 'act' or a refinement ('and', 'or', 'seq')")
        return Box(name=name, body=body, agent=agent, guard=guard, trestr=trestr, reparation=reparation)

    def acttree(self):
        if self.at("act"):
            self.advance()
            return Atomic(self.ident("action name"))
        if not self.at("and", "or", "seq"):
            raise self.fail("'act', 'and', 'or' or 'seq'")
        start = self.advance()
        kind = RefinementKind(start.text)
        self.expect("{")
        children = [self.clause()]
        while True:
            if self.at(","):
                self.advance()
            if not self.at("clause"):
                break
            children.append(self.clause())
        if len(children) < 2:
            raise ContractSyntaxError(
                [Diagnostic(start.line, start.col, "E004", f"'{kind.value}' needs at least two clauses")]
            )
        self.expect("}")
        return Refinement(kind, tuple(children))

    def guard(self) -> Guard:
        atoms = [self.vatom()]
        while self.at("and"):
            self.advance()
            atoms.append(self.vatom())
        return Guard(tuple(atoms))

    def vatom(self) -> VarAtom:
        var = self.ident("variable")
        other = None
        if self.at("-"):
            self.advance()
            other = self.ident("variable")
        op = self.op()
        return VarAtom(var, op, self.nat(), other)

    def trestr(self) -> TimeRestriction:
        atoms = [self.catom()]
        while self.at("and"):
            self.advance()
            atoms.append(self.catom())
        return TimeRestriction(tuple(atoms))

    def cref(self) -> ClockRef:
        if self.at(ABSOLUTE_CLOCK):
            self.advance()
            return ClockRef(None)
        if self.at("after"):
            self.advance()
            self.expect("(")
            name = self.ident("clause name")
            self.expect(")")
            return ClockRef(name)
        raise self.fail("'T' or 'after(<clause>)'")

    def catom(self) -> ClockAtom:
        ref = self.cref()
        other = None
        if self.at("-"):
            self.advance()
            other = self.cref()
        op = self.op()
        return ClockAtom(ref, op, self.nat(), other)


def parse_contract(text: str | bytes, *, check: bool = True) -> Contract:
    """Parse contract source into a :class:`Contract`.

    Raises :class:`ContractSyntaxError` on malformed input.  With ``check``
    (the default) the result is also validated and :class:`ValidationError`
    (or one of its subclasses) is raised when any rule is broken.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ContractSyntaxError(
                [Diagnostic(1, exc.start + 1, "E000", "input is not valid UTF-8")]
            ) from None
    parser = _Parser(tokenize(text))
    try:
        contract = parser.file()
    except RecursionError:
        t = parser.tok
        raise ContractSyntaxError([Diagnostic(t.line, t.col, "E006", "nesting too deep")]) from None
    if check:
        from .rules import raise_for_findings, validate

        raise_for_findings(validate(contract))
    return contract
