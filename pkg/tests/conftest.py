import pytest

from maf.core import Instance

# trees drawn after the two retroactive-merge figures
FIG3 = ("(((r1,r2),(a,b)),((x,y),w));", "(((((a,r1),x),(y,b)),r2),w);")
FIG4 = ("((((a,r1),r2),b),((x,y),w));", "(((((a,b),x),(y,r1)),r2),w);")
# smallest instance found by search whose run ends in the three-tree endgame with a merge
RETRO_4B = ("(((L5,L0),(L2,((L3,L7),(L8,L6)))),(L1,L4));",
            "(((L0,L2),(L7,((L6,L1),(L5,L3)))),(L4,L8));")

ACCEPTANCE_LINES: list[str] = []


def inst(pair) -> Instance:
    return Instance.from_newick(*pair)


@pytest.fixture
def fig3():
    return inst(FIG3)


@pytest.fixture
def fig4():
    return inst(FIG4)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
