"""Command-line driver: parse, check, compile, verify and rank contracts.

Exit codes: 0 success, 1 property violated or validation findings,
2 usage, I/O, syntax or compilation error, 3 state budget exhausted before
a verdict could be reached.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .compiler import compile_contract
from .errors import BudgetExceeded, CodError, ContractSyntaxError, ValidationError
from .explorer import check, explore, format_ranking, parse_query, rank_terminals
from .export import to_dot, to_uppaal_xml
from .frontend import Atomic, Deontic, parse_contract, validate
from .nta import to_json

EXIT_OK, EXIT_FAIL, EXIT_ERROR, EXIT_BUDGET = 0, 1, 2, 3
DEFAULT_BUDGET = 1_000_000


class _Console:
    def __init__(self, stdout, stderr):
        self.out = stdout
        self.err = stderr
        self.color = not os.environ.get("NO_COLOR") and hasattr(stderr, "isatty") and stderr.isatty()

    def error(self, text: str) -> None:
        prefix = "\033[31merror\033[0m" if self.color else "error"
        print(f"{prefix}: {text}", file=self.err)

    def diag(self, text: str) -> None:
        print(text, file=self.err)


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror}") from None


class _UsageError(Exception):
    pass


def _load(path: str, *, check: bool = True):
    return parse_contract(_read(path), check=check)


def _dump(box, depth: int, lines: list[str]) -> None:
    pad = "  " * depth
    head = f"{pad}clause {box.name}"
    if box.agent:
        head += f" agent {box.agent}"
    if not box.guard.is_empty:
        head += f" when {box.guard}"
    if not box.trestr.is_empty:
        head += f" within {box.trestr}"
    lines.append(head)
    body = box.body
    if isinstance(body, Deontic):
        lines.append(f"{pad}  {body.kind.value}")
        body, depth = body.body, depth + 1
    if isinstance(body, Atomic):
        lines.append(f"{'  ' * (depth + 1)}act {body.action}")
    else:
        lines.append(f"{'  ' * (depth + 1)}{body.kind.value}")
        for child in body.children:
            _dump(child, depth + 2, lines)
    if box.reparation is not None:
        lines.append(f"{pad}  reparation")
        _dump(box.reparation, depth + 2, lines)


def cmd_parse(args, con: _Console) -> int:
    c = _load(args.file, check=False)
    head = f"contract {c.name}"
    if c.unit:
        head += f" (unit {c.unit})"
    lines = [head]
    for name, value in c.variables:
        lines.append(f"  var {name} = {value}")
    _dump(c.root, 1, lines)
    print("\n".join(lines), file=con.out)
    return EXIT_OK


def cmd_check(args, con: _Console) -> int:
    report = validate(_load(args.file, check=False))
    for f in report:
        con.diag(f"{args.file}: {f.rule}: {f.clause}: {f.detail}" if f.detail else f"{args.file}: {f.rule}: {f.clause}")
    if report.ok:
        print(f"{args.file}: ok", file=con.out)
        return EXIT_OK
    print(f"{args.file}: {len(report)} finding(s)", file=con.out)
    return EXIT_FAIL


def _queries(items: list[str] | None) -> list[str]:
    out: list[str] = []
    for item in items or ():
        if item.startswith("@"):
            text = _read(item[1:]).decode("utf-8", errors="replace")
            for line in text.splitlines():
                line = line.strip()
                if line and not line.startswith("//") and not line.startswith("#"):
                    out.append(line)
        else:
            out.append(item)
    return out


def cmd_compile(args, con: _Console) -> int:
    nta = compile_contract(_load(args.file))
    stem = Path(args.file).stem
    queries = _queries(args.query)
    outputs: list[tuple[str, str]] = []
    if args.emit == "json":
        outputs.append((f"{stem}.json", to_json(nta)))
    elif args.emit == "dot":
        outputs.append((f"{stem}.dot", to_dot(nta)))
    else:
        xml, q = to_uppaal_xml(nta, queries)
        outputs.append((f"{stem}.xml", xml))
        outputs.append((f"{stem}.q", q))
    if args.output is None:
        con.out.write(outputs[0][1])
        return EXIT_OK
    out_dir = Path(args.output)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in outputs:
            (out_dir / name).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise _UsageError(f"cannot write to {out_dir}: {exc.strerror}") from None
    for name, _ in outputs:
        print(out_dir / name, file=con.out)
    return EXIT_OK


def cmd_verify(args, con: _Console) -> int:
    queries = _queries(args.query)
    if not queries:
        raise _UsageError("no query given")
    parsed = [parse_query(q) for q in queries]
    nta = compile_contract(_load(args.file))
    status = EXIT_OK
    records = []
    for text, q in zip(queries, parsed):
        v = check(nta, q, budget=args.budget, jobs=args.jobs)
        print(v.label, file=con.out)
        print(f"  query: {text}", file=con.out)
        print(f"  states explored: {v.states_explored}", file=con.out)
        if v.trace is not None and not args.quiet:
            kind = "witness" if v.holds else "counterexample"
            print(f"  {kind}:", file=con.out)
            for line in v.trace_text().splitlines():
                print(f"    {line}", file=con.out)
        records.append(v.trace_data())
        if not v.holds:
            status = EXIT_FAIL
    if args.trace_out:
        try:
            Path(args.trace_out).write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise _UsageError(f"cannot write {args.trace_out}: {exc.strerror}") from None
    return status


def cmd_rank(args, con: _Console) -> int:
    nta = compile_contract(_load(args.file))
    g = explore(nta, budget=args.budget, jobs=args.jobs)
    if g.truncated:
        raise BudgetExceeded(len(g), args.budget)
    con.out.write(format_ranking(rank_terminals(g)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="codiagram", description="Compile and verify C-O Diagram contracts.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="print the syntax tree of a contract")
    sp.add_argument("file")
    sp.set_defaults(run=cmd_parse)

    sp = sub.add_parser("check", help="report well-formedness findings")
    sp.add_argument("file")
    sp.set_defaults(run=cmd_check)

    sp = sub.add_parser("compile", help="compile to a network of timed automata")
    sp.add_argument("file")
    sp.add_argument("--emit", choices=("json", "dot", "uppaal"), default="json")
    sp.add_argument("-o", "--output", metavar="DIR", help="write files into DIR instead of stdout")
    sp.add_argument("--query", action="append", metavar="Q", help="query for the .q file (text or @file)")
    sp.set_defaults(run=cmd_compile)

    def explorer_flags(sp):
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximum number of states")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for exploration")

    sp = sub.add_parser("verify", help="model-check queries against a contract")
    sp.add_argument("file")
    sp.add_argument("--query", action="append", required=True, metavar="Q", help="query text or @file")
    sp.add_argument("--trace-out", metavar="PATH", help="write verdicts and traces as JSON")
    sp.add_argument("-q", "--quiet", action="store_true", help="omit traces from the output")
    explorer_flags(sp)
    sp.set_defaults(run=cmd_verify)

    sp = sub.add_parser("rank", help="order reachable terminal states by outcome")
    sp.add_argument("file")
    sp.add_argument("--terminals", action="store_true", help="rank terminal states (the default)")
    explorer_flags(sp)
    sp.set_defaults(run=cmd_rank)
    return p


def main(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    con = _Console(stdout or sys.stdout, stderr or sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    if getattr(args, "budget", 1) < 1 or getattr(args, "jobs", 1) < 1:
        con.error("--budget and --jobs must be positive")
        return EXIT_ERROR
    try:
        return args.run(args, con)
    except _UsageError as exc:
        con.error(str(exc))
        return EXIT_ERROR
    except ContractSyntaxError as exc:
        for d in exc.diagnostics:
            con.diag(d.format(args.file))
        return EXIT_ERROR
    except ValidationError as exc:
        for f in exc.findings:
            con.diag(f"{args.file}: {f.rule}: {f.clause}" + (f": {f.detail}" if f.detail else ""))
        return EXIT_FAIL
    except BudgetExceeded as exc:
        con.error(f"{exc}; raise --budget to obtain a verdict")
        return EXIT_BUDGET
    except CodError as exc:
        con.error(f"{args.file}: {type(exc).__name__}: {exc}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
