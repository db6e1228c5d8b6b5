import pytest

from invforge.parser import parse_program
from invforge.solver import SolverConfig, SolverSession

P1_TEXT = """\
var i: int;
var n: int;

assume n >= 0;
i := 0;
while (i < n) {
  i := i + 1;
}
assert i = n;
"""


@pytest.fixture(scope="module")
def sess():
    with SolverSession(SolverConfig()) as s:
        yield s


@pytest.fixture()
def p1():
    return parse_program(P1_TEXT)


def same_program(p, q) -> bool:
    """Structural equality; the symbol-table fresh counter does not count."""
    return (
        p.body == q.body
        and p.axioms == q.axioms
        and p.symbols.variables == q.symbols.variables
        and p.symbols.functions == q.symbols.functions
    )
