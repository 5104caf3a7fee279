import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from glrstar.grammar import augment, load_grammar, tokenize  # noqa: E402
from glrstar.table import build_table  # noqa: E402

# filled by the acceptance suite, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = Path(__file__).parent / "fixtures"

G1_TEXT = """\
%start S
%fragment S
S -> NP VP ;
NP -> det n ;
NP -> n ;
VP -> v NP ;
the : det
dog : n
cat : n
saw : v
"""

G2_TEXT = """\
%start E
%fragment E
E -> E plus E ;
E -> a ;
a : a
plus : plus
"""


class Built:
    def __init__(self, text: str, subs: str | None = None):
        self.raw = load_grammar(text, subs)
        self.g = augment(self.raw)
        self.t = build_table(self.g)

    def tokens(self, sentence: str):
        return tokenize(self.g, sentence.split())


@pytest.fixture(scope="session")
def g1() -> Built:
    return Built(G1_TEXT)


@pytest.fixture(scope="session")
def g2() -> Built:
    return Built(G2_TEXT)


@pytest.fixture(scope="session")
def g1_subs() -> Built:
    return Built(G1_TEXT + "two : n\n", "too => two\n")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
