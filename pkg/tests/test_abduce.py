"""Implicant search, pool construction, pruning and disjunction assembly."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from invforge.abduce import (
    BUDGET_EXHAUSTED,
    Abducible,
    AbduciblePool,
    Hypothesis,
    SearchBudget,
    abduce,
    get_abducibles,
    global_pool,
    gpid,
    prune_redundant,
)
from invforge.lang import (
    TRUE,
    Cmp,
    IntLit,
    Location,
    Not,
    Or,
    Sort,
    Var,
    complement,
    conj,
    disj,
)
from invforge.parser import parse_program
from invforge.solver import Entail, SolverConfig, SolverSession
from invforge.vc import vcgen

import gen

A = Var("a", Sort.BOOL)
B = Var("b", Sort.BOOL)
X = Var("x", Sort.INT)
I = Var("i", Sort.INT)
N = Var("n", Sort.INT)


def pool_of(*literals):
    return AbduciblePool(
        tuple(Abducible(l, i, 1) for i, l in enumerate(literals)),
        (),
        (),
        1,
    )


def hyp(pool, *ranks):
    return Hypothesis(tuple(pool.abducibles[r] for r in ranks))


def stream(it):
    out = list(it)
    assert BUDGET_EXHAUSTED not in out
    return out


# ----- gpid -----------------------------------------------------------------


def test_gpid_conjunction_goal_finds_the_pair(sess):
    pool = pool_of(A, complement(A), B, complement(B))
    budget = SearchBudget(max_implicant_size=2)
    got = stream(gpid(conj(A, B), Hypothesis(()), pool, budget, sess))
    assert [h.key() for h in got] == [frozenset({0, 2})]
    kept = prune_redundant(got, sess)
    assert [h.formula() for h in kept] == [conj(A, B)]


def test_gpid_yields_both_comparable_literals(sess):
    pool = pool_of(Cmp(">", X, IntLit(1)), Cmp(">", X, IntLit(0)))
    budget = SearchBudget(max_implicant_size=1)
    got = stream(gpid(Cmp(">", X, IntLit(0)), Hypothesis(()), pool, budget, sess))
    keys = {h.key() for h in got}
    assert frozenset({0}) in keys and frozenset({1}) in keys
    kept = prune_redundant(got, sess)
    assert [h.formula() for h in kept] == [Cmp(">", X, IntLit(0))]


def test_gpid_inconsistent_root_is_empty(sess):
    pool = pool_of(Cmp(">", X, IntLit(0)), Cmp("<", X, IntLit(0)))
    root = hyp(pool, 0, 1)
    budget = SearchBudget(max_implicant_size=3)
    assert stream(gpid(Cmp("=", X, X), root, pool, budget, sess)) == []


def test_gpid_trivial_root_already_entails(sess):
    pool = pool_of(A)
    root = hyp(pool, 0)
    got = stream(gpid(A, root, pool, SearchBudget(), sess))
    assert [h.key() for h in got] == [frozenset({0})]


def test_gpid_budget_marker_ends_stream(sess):
    pool = pool_of(A, complement(A), B, complement(B))
    budget = SearchBudget(max_implicant_size=2, node_limit=2)
    got = list(gpid(conj(A, B), Hypothesis(()), pool, budget, sess))
    assert got and got[-1] is BUDGET_EXHAUSTED


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_gpid_soundness_and_size_bound(sess, seed):
    pool, goal = gen.abduction_instance(random.Random(seed))
    budget = SearchBudget(max_implicant_size=2, node_limit=5000)
    for h in stream(gpid(goal, Hypothesis(()), pool, budget, sess)):
        assert h.size <= 2
        assert sess.entails([h.formula()], goal).status is Entail.YES


# ----- prune_redundant ------------------------------------------------------


def test_prune_drops_superset(sess):
    pool = pool_of(A, B)
    hs = [hyp(pool, 0), hyp(pool, 0, 1)]
    assert prune_redundant(hs, sess) == [hyp(pool, 0)]


def test_prune_keeps_weaker_bound(sess):
    pool = pool_of(Cmp(">", X, IntLit(1)), Cmp(">", X, IntLit(0)))
    hs = [hyp(pool, 0), hyp(pool, 1)]
    assert prune_redundant(hs, sess) == [hyp(pool, 1)]


def test_prune_keeps_independent(sess):
    pool = pool_of(A, B)
    hs = [hyp(pool, 0), hyp(pool, 1)]
    assert prune_redundant(hs, sess) == hs


def test_prune_mutual_entailment_keeps_smaller_then_earlier(sess):
    x_pos = Cmp(">", X, IntLit(0))
    ge_one = Cmp(">=", X, IntLit(1))
    pool = pool_of(x_pos, ge_one, A)
    # {x>0} and {x>=1} are equivalent over the integers; the pair is larger
    hs = [hyp(pool, 0, 2), hyp(pool, 0), hyp(pool, 1)]
    assert prune_redundant(hs, sess) == [hyp(pool, 0)]


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_prune_output_is_an_antichain(sess, seed):
    pool, goal = gen.abduction_instance(random.Random(seed))
    budget = SearchBudget(max_implicant_size=2, node_limit=5000)
    hs = stream(gpid(goal, Hypothesis(()), pool, budget, sess))
    kept = prune_redundant(hs, sess)
    for i, h in enumerate(kept):
        for j, g in enumerate(kept):
            if i != j:
                assert sess.entails([h.formula()], g.formula()).status is not Entail.YES
    for h in hs:
        if h not in kept:
            assert any(
                sess.entails([h.formula()], g.formula()).status is Entail.YES
                for g in kept
            )


# ----- pool construction ----------------------------------------------------


def test_global_pool_shape_for_two_ints(p1):
    pool = global_pool(p1, 1)
    lits = [a.literal for a in pool.abducibles]
    # equations between variables come first, then variable comparisons
    assert lits[0] == Cmp("=", I, N)
    assert lits[1] == Not(Cmp("=", I, N))
    assert lits[2] == Cmp("<", I, N)
    assert lits[3] == Cmp(">=", I, N)
    assert Cmp("<=", I, N) in lits
    assert Cmp("<=", I, IntLit(0)) in lits
    assert [a.rank for a in pool.abducibles] == list(range(len(pool)))
    assert pool.constants == (0, 1)


def test_pool_pairs_atom_with_complement(p1):
    pool = global_pool(p1, 1)
    lits = [a.literal for a in pool.abducibles]
    for k in range(0, len(lits), 2):
        assert lits[k + 1] == complement(lits[k])


def test_bool_variables_lead_the_order():
    p = parse_program("var b: bool;\nvar x: int;\nvar y: int;\nhavoc b;\n")
    pool = global_pool(p, 1)
    lits = [a.literal for a in pool.abducibles]
    assert lits[0] == Var("b", Sort.BOOL)
    assert lits[1] == Not(Var("b", Sort.BOOL))
    assert all(isinstance(l, (Cmp, Not)) for l in lits[2:])


def test_depth_two_pool_extends_depth_one(p1):
    one = global_pool(p1, 1)
    two = global_pool(p1, 2)
    assert len(two) > len(one)
    assert [a.literal for a in two.abducibles[: len(one)]] == [
        a.literal for a in one.abducibles
    ]
    assert {a.depth for a in two.abducibles} == {1, 2}


def test_get_abducibles_filters_entailed_literals(sess, p1):
    # the loop-precondition goal: its antecedent carries n >= 0 and i = 0
    goal = vcgen(p1).preconditions[Location((2,))][0]
    pool = get_abducibles(p1, Location((2,)), goal, SearchBudget(), sess)
    lits = [a.literal for a in pool.abducibles]
    assert Cmp(">=", N, IntLit(0)) not in lits
    assert Cmp("=", I, IntLit(0)) not in lits
    assert Cmp("<=", I, N) not in lits  # i = 0 and n >= 0 already force it
    assert lits  # plenty survives, e.g. literals false at i = 0
    assert Cmp("<", N, IntLit(0)) in lits
    for a in pool.abducibles:
        assert sess.entails([goal.antecedent], a.literal).status is not Entail.YES


# ----- abduce ---------------------------------------------------------------


def p1_goal(p1):
    return vcgen(p1).assertions[0]


def test_abduce_finds_the_bound_for_p1(sess, p1):
    goal = p1_goal(p1)
    budget = SearchBudget(max_implicant_size=1, max_abducible_depth=1)
    got = stream(abduce(goal, p1, Location((2,)), budget, sess))
    assert Cmp("<=", I, N) in got


def test_abduce_disjuncts_one_never_disjoins(sess, p1):
    goal = p1_goal(p1)
    budget = SearchBudget(disjuncts=1)
    for f in stream(abduce(goal, p1, Location((2,)), budget, sess)):
        assert not isinstance(f, Or)


def test_abduce_streams_singles_then_disjunction(sess):
    p = parse_program("var a: bool;\nvar b: bool;\nassert a || b;\n")
    goal = vcgen(p).assertions[0]
    budget = SearchBudget(max_implicant_size=1, disjuncts=2)
    got = stream(abduce(goal, p, Location(()), budget, sess))
    assert got == [A, B, disj(A, B)]


def test_abduce_stream_prefix_deterministic(p1):
    runs = []
    for _ in range(2):
        with SolverSession(SolverConfig()) as s:
            goal = vcgen(p1).assertions[0]
            budget = SearchBudget(max_implicant_size=1, disjuncts=2)
            runs.append(stream(abduce(goal, p1, Location((2,)), budget, s)))
    assert runs[0] == runs[1]
