"""Hypothesis search for failed verification conditions.

Candidates are conjunctions of literals drawn from a fixed, ordered pool
built out of the program's own symbols.  The enumerator explores subsets
of the pool depth-first, pruning with countermodels, and streams every
subset found to entail the goal.  Small helpers assemble two-disjunct
candidates and discard redundant ones.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .lang import (
    App,
    Assert,
    Assign,
    Assume,
    BinArith,
    Cmp,
    Expr,
    Havoc,
    If,
    IntLit,
    Location,
    Program,
    Sort,
    TRUE,
    Var,
    While,
    complement,
    conj,
    disj,
    free_variables,
    functions_used,
    implies,
    loop_locations,
    neg,
    program_int_literals,
    set_invariant,
)
from .parser import render_expr, render_program
from .smtlib import CannotEvaluate, Model, evaluate
from .solver import SolverSession, Status
from .vc import Vc


class _Marker:
    def __repr__(self):
        return "BUDGET_EXHAUSTED"


# Sent on the stream (then the stream ends) when the node limit was hit
# before the search space was fully explored.
BUDGET_EXHAUSTED = _Marker()


class _BudgetHit(Exception):
    pass


@dataclass(frozen=True)
class SearchBudget:
    max_implicant_size: int = 1
    max_abducible_depth: int = 1
    disjuncts: int = 1
    node_limit: int = 5000


@dataclass(frozen=True)
class Abducible:
    literal: Expr
    rank: int
    depth: int


@dataclass(frozen=True)
class AbduciblePool:
    abducibles: tuple[Abducible, ...]
    variables: tuple[str, ...]
    constants: tuple[int, ...]
    max_depth: int

    def __iter__(self):
        return iter(self.abducibles)

    def __len__(self):
        return len(self.abducibles)


@dataclass(frozen=True)
class Hypothesis:
    literals: tuple[Abducible, ...]

    @property
    def size(self) -> int:
        return len(self.literals)

    def formula(self) -> Expr:
        return conj(*(a.literal for a in self.literals))

    def key(self) -> frozenset:
        return frozenset(a.rank for a in self.literals)


def dump_hypothesis(h: Hypothesis, verdict: str) -> str:
    """Debug-log line: verdict, then the literals in pool order."""
    body = " & ".join(render_expr(a.literal) for a in h.literals)
    return f"{verdict} {body or 'true'}"


# ---------------------------------------------------------------------------
# Pool construction


def _program_variables(p: Program) -> dict[str, Sort]:
    """Variables occurring in instructions or axioms; invariants excluded."""
    acc: dict[str, Sort] = {}

    def block(instrs):
        for ins in instrs:
            if isinstance(ins, Assign):
                acc[ins.target] = p.symbols.sort(ins.target)
                free_variables(ins.value, acc)
            elif isinstance(ins, Havoc):
                acc[ins.target] = p.symbols.sort(ins.target)
            elif isinstance(ins, (Assume, Assert)):
                free_variables(ins.formula, acc)
            elif isinstance(ins, If):
                free_variables(ins.cond, acc)
                block(ins.then)
                block(ins.orelse)
            elif isinstance(ins, While):
                free_variables(ins.cond, acc)
                block(ins.body)

    block(p.body)
    for ax in p.axioms:
        free_variables(ax, acc)
    return acc


def _program_functions(p: Program):
    acc: dict[str, tuple[tuple[Sort, ...], Sort]] = {}

    def block(instrs):
        for ins in instrs:
            if isinstance(ins, Assign):
                functions_used(ins.value, acc)
            elif isinstance(ins, (Assume, Assert)):
                functions_used(ins.formula, acc)
            elif isinstance(ins, If):
                functions_used(ins.cond, acc)
                block(ins.then)
                block(ins.orelse)
            elif isinstance(ins, While):
                functions_used(ins.cond, acc)
                block(ins.body)

    block(p.body)
    for ax in p.axioms:
        functions_used(ax, acc)
    return acc


def _generate_pool(p: Program, max_depth: int) -> AbduciblePool:
    """Deterministic pool: booleans, then variable equations, then depth-1
    comparisons, then depth-2 terms; each atom immediately followed by its
    negation."""
    variables = _program_variables(p)
    bools = sorted(n for n, s in variables.items() if s is Sort.BOOL)
    ints = sorted(n for n, s in variables.items() if s is Sort.INT)
    consts = sorted({0, 1} | program_int_literals(p))
    out: list[Abducible] = []

    def emit(atom: Expr, depth: int):
        out.append(Abducible(atom, len(out), depth))
        out.append(Abducible(complement(atom), len(out), depth))

    ivar = {n: Var(n, Sort.INT) for n in ints}
    for b in bools:
        emit(Var(b, Sort.BOOL), 1)
    for x, y in itertools.combinations(ints, 2):
        emit(Cmp("=", ivar[x], ivar[y]), 1)
    for x, y in itertools.combinations(ints, 2):
        emit(Cmp("<", ivar[x], ivar[y]), 1)
        emit(Cmp("<=", ivar[x], ivar[y]), 1)
    for x in ints:
        for c in consts:
            emit(Cmp("=", ivar[x], IntLit(c)), 1)
            emit(Cmp("<", ivar[x], IntLit(c)), 1)
            emit(Cmp("<=", ivar[x], IntLit(c)), 1)

    if max_depth >= 2:
        for x in ints:
            for op in ("+", "-", "*"):
                for c in consts:
                    if c == 0 or (op == "*" and c == 1):
                        continue
                    term = BinArith(op, ivar[x], IntLit(c))
                    for y in ints:
                        if y == x:
                            continue
                        emit(Cmp("=", term, ivar[y]), 2)
                        emit(Cmp("<", term, ivar[y]), 2)
                        emit(Cmp("<=", term, ivar[y]), 2)
        for fname, (arg_sorts, ret) in sorted(_program_functions(p).items()):
            if any(s is not Sort.INT for s in arg_sorts):
                continue
            for args in itertools.product(ints, repeat=len(arg_sorts)):
                app = App(fname, tuple(ivar[a] for a in args), ret)
                if ret is Sort.BOOL:
                    emit(app, 2)
                    continue
                for y in ints:
                    emit(Cmp("=", app, ivar[y]), 2)
                    emit(Cmp("<", app, ivar[y]), 2)
                    emit(Cmp("<=", app, ivar[y]), 2)
                for c in consts:
                    emit(Cmp("=", app, IntLit(c)), 2)
                    emit(Cmp("<", app, IntLit(c)), 2)
                    emit(Cmp("<=", app, IntLit(c)), 2)

    return AbduciblePool(tuple(out), tuple(bools + ints), tuple(consts), max_depth)


_pool_cache: dict[tuple[str, int], AbduciblePool] = {}


def _pool_key(p: Program, max_depth: int) -> tuple[str, int]:
    bare = p
    for loc in loop_locations(p):
        bare = set_invariant(bare, loc, TRUE)
    return render_program(bare), max_depth


def global_pool(p: Program, max_depth: int) -> AbduciblePool:
    """The program-wide pool, cached; strengthening a loop invariant does
    not change the key, so one program shares one pool per depth."""
    key = _pool_key(p, max_depth)
    base = _pool_cache.get(key)
    if base is None:
        base = _generate_pool(p, max_depth)
        _pool_cache[key] = base
    return base


def get_abducibles(
    p: Program, l: Location, goal: Vc, budget: SearchBudget, sess: SolverSession
) -> AbduciblePool:
    """The program-global pool, minus the literals already entailed by the
    goal's antecedent."""
    base = global_pool(p, budget.max_abducible_depth)
    # every declared symbol is in scope everywhere, so no per-location cut
    kept = []
    for a in base:
        r = sess.check_sat([goal.antecedent, neg(a.literal)], want_model=False)
        if r.status is not Status.UNSAT:
            kept.append(a)
    return AbduciblePool(tuple(kept), base.variables, base.constants, base.max_depth)


# ---------------------------------------------------------------------------
# Implicant enumeration


def _model_sat(model: Model, lit: Expr, default: bool) -> bool:
    try:
        return bool(evaluate(lit, model))
    except CannotEvaluate:
        return default


def gpid(
    goal: Expr,
    m: Hypothesis,
    pool: AbduciblePool,
    budget: SearchBudget,
    sess: SolverSession,
):
    """Stream the subsets of the pool that entail the goal, rooted at m.

    Every yielded Hypothesis is solver-verified to entail the goal before
    being emitted.  If the node limit runs out, BUDGET_EXHAUSTED is yielded
    and the stream ends.
    """
    nodes = [budget.node_limit]
    try:
        yield from _gpid(goal, m.literals, list(pool.abducibles), budget, sess, nodes)
    except _BudgetHit:
        yield BUDGET_EXHAUSTED


def _gpid(goal, m_lits, pool, budget, sess, nodes):
    nodes[0] -= 1
    if nodes[0] < 0:
        raise _BudgetHit
    if len(m_lits) > budget.max_implicant_size:
        return
    forms = [a.literal for a in m_lits]
    # inconsistent hypothesis sets are dead ends; unknown counts as consistent
    if forms and sess.check_sat(forms, want_model=False).status is Status.UNSAT:
        return
    r = sess.check_sat([*forms, neg(goal)], want_model=True)
    if r.status is Status.UNSAT:
        yield Hypothesis(m_lits)
        return
    if len(m_lits) == budget.max_implicant_size:
        return
    model = r.model

    filtered = []
    for a in pool:
        hit = sess.check_sat([*forms, neg(goal), neg(a.literal)], want_model=False)
        if hit.status is Status.UNSAT:
            continue  # adding the literal cannot make the goal entailed
        clash = sess.check_sat([*forms, a.literal], want_model=False)
        if clash.status is Status.UNSAT:
            continue  # the literal contradicts the current hypothesis set
        filtered.append(a)

    for a in filtered:
        if model is not None and _model_sat(model, a.literal, default=False):
            continue  # already true in the countermodel: cannot refute it
        if model is not None:
            sub = [
                b
                for b in filtered
                if (b.rank < a.rank and _model_sat(model, b.literal, default=True))
                or b.rank > a.rank
            ]
        else:
            sub = [b for b in filtered if b.rank > a.rank]
        extended = tuple(sorted((*m_lits, a), key=lambda x: x.rank))
        yield from _gpid(goal, extended, sub, budget, sess, nodes)


# ---------------------------------------------------------------------------
# Post-processing


def _entails_formula(sess: SolverSession, a: Expr, b: Expr) -> bool:
    return sess.check_sat([a, neg(b)], want_model=False).status is Status.UNSAT


def prune_redundant(hs: list[Hypothesis], sess: SolverSession) -> list[Hypothesis]:
    """Keep only the most general hypotheses: drop any that entails a kept
    one, evict any kept one entailed by a newcomer.  Ties keep the smaller,
    then the earlier."""
    order = sorted(range(len(hs)), key=lambda i: (hs[i].size, i))
    kept: list[tuple[int, Expr]] = []
    for i in order:
        f = hs[i].formula()
        if any(_entails_formula(sess, f, kf) for _, kf in kept):
            continue
        kept = [(j, kf) for j, kf in kept if not _entails_formula(sess, kf, f)]
        kept.append((i, f))
    return [hs[i] for i, _ in sorted(kept)]


def abduce(
    goal: Vc, p: Program, l: Location, budget: SearchBudget, sess: SolverSession
):
    """Stream repair candidates for a failed condition: single implicants
    first (smallest size first), then pairwise disjunctions when allowed."""
    pool = get_abducibles(p, l, goal, budget, sess)
    phi = implies(goal.antecedent, goal.consequent)
    seen: set = set()
    singles: list[Expr] = []
    exhausted = False
    for size in range(1, budget.max_implicant_size + 1):
        phase = SearchBudget(
            max_implicant_size=size,
            max_abducible_depth=budget.max_abducible_depth,
            disjuncts=budget.disjuncts,
            node_limit=budget.node_limit,
        )
        for h in gpid(phi, Hypothesis(()), pool, phase, sess):
            if h is BUDGET_EXHAUSTED:
                exhausted = True
                break
            if h.key() in seen:
                continue
            seen.add(h.key())
            f = h.formula()
            if sess.check_sat([f], want_model=False).status is Status.UNSAT:
                continue  # unsatisfiable candidate
            if sess.check_sat([neg(f)], want_model=False).status is Status.UNSAT:
                continue  # trivially true candidate
            singles.append(f)
            yield f
        if exhausted:
            yield BUDGET_EXHAUSTED
            return
    if budget.disjuncts >= 2:
        for j in range(1, len(singles)):
            for i in range(j):
                d = disj(singles[i], singles[j])
                if sess.check_sat([neg(d)], want_model=False).status is Status.UNSAT:
                    continue
                yield d
