import pathlib

import pytest

from scpl.parser import parse_program
from scpl.staticcheck import CheckedProgram, check

CORPUS = pathlib.Path(__file__).resolve().parents[1] / "src" / "scpl" / "corpus"

CONTRACTS = [
    "tourists_hosts",
    "brokered",
    "currency_endowment",
    "currency_egalitarian",
    "citizens_band",
    "democratic_group",
]


def corpus_path(name: str) -> pathlib.Path:
    return CORPUS / f"{name}.scpl"


def load_corpus(name: str) -> CheckedProgram:
    return check(parse_program(corpus_path(name).read_text(),
                               source=f"{name}.scpl"))


@pytest.fixture
def tourists():
    return load_corpus("tourists_hosts")


# Acceptance criteria report one line each; collected here so the lines
# survive pytest's output capture and appear in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
