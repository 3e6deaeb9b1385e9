from __future__ import annotations

from pathlib import Path

import pytest

from codiagram import compile_contract, parse_contract

HERE = Path(__file__).parent
CORPUS = sorted((HERE / "corpus").glob("*.cod"))
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture(params=CORPUS, ids=lambda p: p.stem)
def corpus_file(request) -> Path:
    return request.param


def load(name: str):
    return parse_contract((HERE / "corpus" / f"{name}.cod").read_text())


def compile_named(name: str):
    return compile_contract(load(name))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
