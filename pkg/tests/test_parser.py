import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import P1_TEXT, same_program
from gen import full_program
from invforge.lang import (
    And,
    Assert,
    Assign,
    Assume,
    Cmp,
    Havoc,
    IntLit,
    Location,
    Not,
    Sort,
    TRUE,
    Var,
    While,
    loop_locations,
    set_invariant,
)
from invforge.parser import (
    ParseError,
    SortError,
    UndeclaredSymbolError,
    parse_program,
    render_expr,
    render_program,
)


def test_p1_shape():
    p = parse_program(P1_TEXT)
    assert len(p.body) == 4
    assert loop_locations(p) == [Location((2,))]
    assert isinstance(p.body[0], Assume)
    assert isinstance(p.body[3], Assert)


def test_loop_without_annotation_gets_true_invariant():
    p = parse_program(P1_TEXT)
    assert p.body[2].invariant == TRUE


def test_invariant_clause_is_parsed():
    p = parse_program(
        "var i: int;\nwhile (i < 3) invariant i <= 3 {\n  i := i + 1;\n}\n"
    )
    assert p.body[0].invariant == Cmp("<=", Var("i", Sort.INT), IntLit(3))


def test_star_condition_desugars_to_a_fresh_flag():
    p = parse_program("var x: int;\nwhile (*) {\n  x := x + 1;\n}\n")
    havoc, loop = p.body
    assert isinstance(havoc, Havoc)
    assert isinstance(loop, While)
    assert loop.cond == Var(havoc.target, Sort.BOOL)
    # the flag is re-havoced at the end of every iteration
    assert loop.body[-1] == Havoc(havoc.target)
    assert p.symbols.sort(havoc.target) is Sort.BOOL


def test_sort_errors():
    with pytest.raises(SortError):
        parse_program("var x: int;\nassert x = true;\n")
    with pytest.raises(SortError):
        parse_program("var b: bool;\nb := 3;\n")
    with pytest.raises(SortError):
        parse_program("var x: int;\nassume x + true > 0;\n")


def test_undeclared_symbols():
    with pytest.raises(UndeclaredSymbolError):
        parse_program("var x: int;\ny := 0;\n")
    with pytest.raises(UndeclaredSymbolError):
        parse_program("var x: int;\nassume f(x) > 0;\n")


def test_syntax_error_carries_position():
    with pytest.raises(ParseError) as info:
        parse_program("var x: int;\nx := ;\n")
    assert info.value.span is not None
    assert info.value.span.line == 2


def test_comments_are_ignored():
    p = parse_program("var x: int;\n// setup\nx := 1; // trailing\n")
    assert p.body == (Assign("x", IntLit(1)),)


def test_not_equal_desugars_to_negated_equality():
    p = parse_program("var x: int;\nassume x != 2;\n")
    assert p.body[0].formula == Not(Cmp("=", Var("x", Sort.INT), IntLit(2)))
    assert render_expr(p.body[0].formula) == "x != 2"


def test_negated_comparison_flips():
    p = parse_program("var x: int;\nvar y: int;\nassume !(x <= y);\n")
    assert p.body[0].formula == Cmp(">", Var("x", Sort.INT), Var("y", Sort.INT))


def test_precedence():
    p = parse_program(
        "var x: int;\nvar b: bool;\n"
        "assume b && x < 1 || x > 2 => x = 0;\n"
        "x := x + 2 * x - 1;\n"
    )
    f = p.body[0].formula
    # => binds loosest, || above it, && above that, comparisons are atoms
    assert f.__class__.__name__ == "Implies"
    assert f.lhs.__class__.__name__ == "Or"
    assert f.lhs.args[0].__class__.__name__ == "And"
    term = p.body[1].value
    assert render_expr(term) == "x + 2 * x - 1"


def test_boolean_assignment_accepts_formulas():
    p = parse_program("var x: int;\nvar b: bool;\nb := x < 1;\n")
    assert p.body[0] == Assign("b", Cmp("<", Var("x", Sort.INT), IntLit(1)))


def test_declarations_render_header_even_for_empty_body():
    p = parse_program("var x: int;\nfun f: int, int -> bool;\n")
    text = render_program(p)
    assert "var x: int;" in text
    assert "fun f: int, int -> bool;" in text
    assert same_program(parse_program(text), p)


def test_axioms_round_trip():
    src = "var x: int;\nfun f: int -> int;\naxiom f(0) = 1;\n\nassume f(x) > 0;\n"
    p = parse_program(src)
    assert len(p.axioms) == 1
    assert same_program(parse_program(render_program(p)), p)


def test_true_invariant_is_not_printed():
    p = parse_program(P1_TEXT)
    assert "invariant" not in render_program(p)


def test_top_unit_is_dropped_from_printed_invariants():
    p = parse_program(P1_TEXT)
    bound = Cmp("<=", Var("i", Sort.INT), Var("n", Sort.INT))
    q = set_invariant(p, Location((2,)), And((TRUE, bound)))
    assert "invariant i <= n {" in render_program(q)


def test_rendering_is_deterministic():
    p = parse_program(P1_TEXT)
    assert render_program(p) == render_program(parse_program(P1_TEXT))


def test_round_trip_fixed_cases():
    for src in (
        P1_TEXT,
        "var x: int;\nvar b: bool;\n"
        "havoc x;\nif (x < 0) {\n  b := false;\n} else {\n  b := true;\n}\n"
        "assert b || x >= 0;\n",
        "var i: int;\nwhile (i < 9) invariant i <= 9 {\n  i := i + 1;\n}\n",
    ):
        p = parse_program(src)
        assert same_program(parse_program(render_program(p)), p)


@settings(max_examples=200)
@given(st.integers(0, 10**9))
def test_round_trip_generated_programs(seed):
    p = full_program(random.Random(seed))
    text = render_program(p)
    q = parse_program(text)
    assert same_program(p, q)
    assert render_program(q) == text
