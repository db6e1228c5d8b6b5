"""Path propagation, inductiveness repair and the synthesis loop."""

import pytest

from invforge.abduce import SearchBudget
from invforge.ilinva import (
    DeepeningSchedule,
    SynthesisStats,
    _State,
    _attempt,
    backprop,
    forwardprop,
    ilinva,
    ind,
    path_extract,
    strengthen,
)
from invforge.lang import (
    TRUE,
    Assign,
    Assume,
    Cmp,
    IntLit,
    InvalidLocationError,
    Location,
    Sort,
    Var,
    conj,
    equiv_mod_invariants,
    implies,
    instruction_at,
    neg,
    set_invariant,
)
from invforge.parser import parse_program
from invforge.solver import SolverConfig, SolverSession
from invforge.vc import Vc, Verdict, VcKind, check_vc, vcgen

from conftest import P1_TEXT

I = Var("i", Sort.INT)
J = Var("j", Sort.INT)
N = Var("n", Sort.INT)
LEN = Var("len", Sort.INT)
LOOP = Location((2,))


def state(sess):
    return _State(vc_sess=sess, abd_sess=sess, stats=SynthesisStats())


# ----- path extraction ------------------------------------------------------


def test_path_same_location_is_empty(p1):
    assert path_extract(p1, Location((1,)), Location((1,))).body == ()


def test_path_single_instruction(p1):
    got = path_extract(p1, Location((1,)), Location((2,)))
    assert got.body == (instruction_at(p1, Location((1,))),)


def test_path_skips_loops(p1):
    got = path_extract(p1, Location((0,)), Location((3,)))
    assert [type(i) for i in got.body] == [Assume, Assign]


def test_path_from_body_end_leaves_loop_for_free(p1):
    assert path_extract(p1, Location((2, 1, 1)), Location((3,))).body == ()


def test_path_within_loop_body(p1):
    got = path_extract(p1, Location((2, 1, 0)), Location((2, 1, 1)))
    assert got.body == (instruction_at(p1, Location((2, 1, 0))),)


def test_path_rejects_reversed_range(p1):
    with pytest.raises(InvalidLocationError):
        path_extract(p1, Location((3,)), Location((1,)))


def test_path_rejects_unknown_location(p1):
    with pytest.raises(InvalidLocationError):
        path_extract(p1, Location((0,)), Location((9,)))


# ----- propagation ----------------------------------------------------------


def test_backprop_identity(p1):
    f = Cmp("<=", I, N)
    assert backprop(f, p1, Location((2,)), Location((2,))) == f


def test_backprop_through_assignment(p1):
    got = backprop(Cmp("<=", I, N), p1, Location((2,)), Location((1,)))
    assert got == Cmp("<=", IntLit(0), N)


def test_backprop_through_assume_and_assignment(p1):
    got = backprop(Cmp("<=", I, N), p1, Location((2,)), Location((0,)))
    assert got == implies(
        Cmp(">=", N, IntLit(0)), Cmp("<=", IntLit(0), N)
    )


def test_forwardprop_identity(p1):
    f = Cmp("<=", I, N)
    assert forwardprop(f, p1, Location((0,)), Location((0,))) == f


def test_forwardprop_over_prefix(p1):
    got = forwardprop(TRUE, p1, Location((0,)), Location((2,)))
    assert got == conj(Cmp(">=", N, IntLit(0)), Cmp("=", I, IntLit(0)))


def test_forwardprop_into_nested_loop():
    p = parse_program(
        "var i: int;\nvar j: int;\nvar n: int;\n"
        "while (i < n) {\n  j := 0;\n  while (j < i) {\n    j := j + 1;\n  }\n}\n"
    )
    got = forwardprop(Cmp("<=", I, N), p, Location((0, 1, 0)), Location((0, 1, 1)))
    assert got == conj(Cmp("<=", I, N), Cmp("=", J, IntLit(0)))


def test_adjointness_on_extracted_paths(sess, p1):
    l1, l2 = Location((0,)), Location((3,))
    fs = [TRUE, Cmp(">=", N, IntLit(0)), Cmp("=", I, IntLit(0))]
    gs = [Cmp("<=", IntLit(0), N), Cmp("=", I, IntLit(1)), TRUE]
    for f in fs:
        for g in gs:
            back = check_vc(_vc(f, backprop(g, p1, l2, l1)), sess)
            forth = check_vc(_vc(forwardprop(f, p1, l1, l2), g), sess)
            assert back is forth


def _vc(ante, cons):
    return Vc("t:adj", VcKind.ASSERTION, ante, cons, frozenset(), Location(()))


# ----- strengthen -----------------------------------------------------------


def test_strengthen_drops_top_unit(p1):
    q = strengthen(p1, LOOP, Cmp("<=", I, N))
    assert instruction_at(q, LOOP).invariant == Cmp("<=", I, N)


def test_strengthen_conjoins(p1):
    q = strengthen(p1, LOOP, Cmp("<=", I, N))
    q = strengthen(q, LOOP, Cmp(">=", I, IntLit(0)))
    assert instruction_at(q, LOOP).invariant == conj(
        Cmp("<=", I, N), Cmp(">=", I, IntLit(0))
    )


def test_strengthen_preserves_shape(p1):
    q = strengthen(p1, LOOP, Cmp("<=", I, N))
    assert equiv_mod_invariants(p1, q)


def test_strengthen_requires_a_loop(p1):
    with pytest.raises(InvalidLocationError):
        strengthen(p1, Location((0,)), TRUE)


def test_attempt_dedups_and_filters(sess, p1):
    st = state(sess)
    xi = Cmp("<=", I, N)
    q = _attempt(p1, LOOP, xi, st)
    assert q is not None
    assert _attempt(p1, LOOP, xi, st) is None  # same key again
    assert _attempt(q, LOOP, xi, st) is None  # no progress on q either
    # entry filter: i > 0 is false right before the loop
    assert _attempt(p1, LOOP, Cmp(">", I, IntLit(0)), st) is None
    assert st.stats.candidates_tried >= 2


# ----- schedule -------------------------------------------------------------


def test_default_schedule_levels():
    got = [
        (b.max_abducible_depth, b.max_implicant_size)
        for b in DeepeningSchedule.default().levels
    ]
    assert got == [(1, 1), (1, 2), (2, 2)]


def test_schedule_respects_caps():
    got = DeepeningSchedule.default(max_depth=1, max_size=1).levels
    assert [(b.max_abducible_depth, b.max_implicant_size) for b in got] == [(1, 1)]


def test_schedule_appends_requested_maximum():
    got = DeepeningSchedule.default(max_depth=3, max_size=2).levels
    assert [(b.max_abducible_depth, b.max_implicant_size) for b in got] == [
        (1, 1),
        (1, 2),
        (2, 2),
        (3, 2),
    ]


def test_schedule_propagates_disjuncts_and_node_limit():
    for b in DeepeningSchedule.default(disjuncts=2, node_limit=77).levels:
        assert b.disjuncts == 2
        assert b.node_limit == 77


# ----- ind ------------------------------------------------------------------


def test_ind_keeps_already_inductive_program(sess, p1):
    p = set_invariant(p1, LOOP, Cmp("<=", I, N))
    assert ind(p, LOOP, SearchBudget(), state(sess)) is p


def test_ind_repairs_with_an_extra_conjunct(sess):
    p = parse_program((_fig3_text()))
    loop = Location((2,))
    # len != 0 holds on entry but alone does not survive the body
    cand = set_invariant(p, loop, neg(Cmp("=", LEN, IntLit(0))))
    vs = vcgen(cand)
    assert check_vc(vs.preconditions[loop][0], sess) is Verdict.VALID
    assert check_vc(vs.propagation[loop][0], sess) is Verdict.INVALID
    st = state(sess)
    r = ind(cand, loop, SearchBudget(), st)
    assert r is not None
    after = vcgen(r)
    assert check_vc(after.preconditions[loop][0], sess) is Verdict.VALID
    assert check_vc(after.propagation[loop][0], sess) is Verdict.VALID
    # repaired invariant still carries the original conjunct
    inv = instruction_at(r, loop).invariant
    assert sess.entails([inv], neg(Cmp("=", LEN, IntLit(0)))).status.name == "YES"


def _fig3_text():
    return (
        "var i: int;\nvar len: int;\nvar m: int;\n\n"
        "i := 1;\nlen := 1;\n"
        "while (i < m) {\n  i := i + 1;\n  len := len + 1;\n}\n"
        "assert i = len;\n"
    )


def test_ind_fails_when_no_small_repair_exists(sess, p1):
    p = set_invariant(p1, LOOP, Cmp("=", I, IntLit(0)))
    budget = SearchBudget(max_implicant_size=1, max_abducible_depth=1)
    assert ind(p, LOOP, budget, state(sess)) is None


# ----- ilinva ---------------------------------------------------------------


def test_ilinva_solves_p1(sess, p1):
    stats = SynthesisStats()
    r = ilinva(p1, DeepeningSchedule.default(), sess, stats=stats)
    assert r is not None
    assert equiv_mod_invariants(p1, r)
    assert all(check_vc(v, sess) is Verdict.VALID for v in vcgen(r).all_vcs())
    assert instruction_at(r, LOOP).invariant != TRUE
    assert stats.candidates_tried >= 1


def test_ilinva_returns_verified_program_unchanged(sess, p1):
    p = set_invariant(p1, LOOP, Cmp("<=", I, N))
    stats = SynthesisStats()
    r = ilinva(p, DeepeningSchedule.default(), sess, stats=stats)
    assert r is p
    assert stats.candidates_tried == 0


def test_ilinva_fails_without_a_loop_to_blame(sess):
    p = parse_program("var x: int;\nassume x = 0;\nassert x = 1;\n")
    stats = SynthesisStats()
    assert ilinva(p, DeepeningSchedule.default(), sess, stats=stats) is None


def test_ilinva_trace_stream(sess, p1):
    rows = []
    ilinva(
        p1,
        DeepeningSchedule.default(),
        sess,
        trace=lambda loc, f, v, c: rows.append((loc, f, v, c)),
    )
    assert rows
    for loc, formula, verdict, calls in rows:
        assert loc == LOOP
        assert isinstance(formula, str) and formula
        assert verdict in ("valid", "invalid", "unknown")
        assert isinstance(calls, int)
    assert [c for _, _, _, c in rows] == sorted(c for _, _, _, c in rows)


def test_ilinva_deterministic_work_counts():
    runs = []
    for _ in range(2):
        with SolverSession(SolverConfig()) as s:
            stats = SynthesisStats()
            p = parse_program(P1_TEXT)
            r = ilinva(p, DeepeningSchedule.default(), s, stats=stats)
            assert r is not None
            runs.append((stats.candidates_tried, s.stats.solver_calls))
    assert runs[0] == runs[1]
