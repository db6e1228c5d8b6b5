"""Invariant synthesis by repair.

The orchestrator repeatedly checks the program's verification conditions,
abduces hypotheses for a failing one, carries each hypothesis to a loop
head (backward for assertion repairs, forward for inductiveness repairs),
strengthens the loop's invariant, and recurses.  Candidate budgets grow
over an iterative-deepening schedule; a wall-clock deadline bounds the
whole search.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .abduce import BUDGET_EXHAUSTED, SearchBudget, abduce
from .lang import (
    Expr,
    If,
    InvalidLocationError,
    Location,
    Program,
    While,
    conj,
    enclosing_block,
    instruction_at,
    locations,
    loop_locations,
    neg,
    set_invariant,
)
from .parser import render_expr
from .solver import SolverSession, Status
from .vc import Vc, Verdict, check_vc, sp, vcgen, wp


# ---------------------------------------------------------------------------
# Loop-free code extraction


def _rm_loops(block):
    out = []
    for ins in block:
        if isinstance(ins, While):
            continue
        if isinstance(ins, If):
            out.append(If(ins.cond, _rm_loops(ins.then), _rm_loops(ins.orelse), ins.span))
        else:
            out.append(ins)
    return tuple(out)


def _cross(instr):
    """The instruction sequence contributed by stepping over instr."""
    if isinstance(instr, While):
        return []
    if isinstance(instr, If):
        return [If(instr.cond, _rm_loops(instr.then), _rm_loops(instr.orelse), instr.span)]
    return [instr]


def _path(p: Program, frm: tuple, to: tuple) -> list:
    if not frm <= to:
        # reachable when frm sits in one branch of a conditional and to in
        # or beyond the other: no loop-free executable path exists
        raise InvalidLocationError(f"no loop-free path from {Location(frm)} to {Location(to)}")
    if frm == to:
        return []
    if frm == to[: len(frm)]:
        # entering a sub-block costs nothing
        return _path(p, frm + (to[len(frm)], 0), to)
    if to[-1] >= 1:
        prev = to[:-1] + (to[-1] - 1,)
        if frm <= prev:
            return _path(p, frm, prev) + _cross(instruction_at(p, Location(prev)))
        # frm lies strictly inside the instruction just before to; walking
        # to that block's end leaves the instruction without crossing it
        b = frm[len(prev)]
        inner = enclosing_block(p, Location(prev + (b, 0)))
        return _path(p, frm, prev + (b, len(inner)))
    # to is a block-entry position; it coincides with its instruction's start
    if len(to) < 2:
        raise InvalidLocationError(f"no path to {Location(to)}")
    return _path(p, frm, to[:-2])


def path_extract(p: Program, frm: Location, to: Location) -> Program:
    """The loop-free straight-line code between two program points."""
    valid = set(map(tuple, locations(p)))
    if tuple(frm) not in valid:
        raise InvalidLocationError(f"no such location: {frm}")
    if tuple(to) not in valid:
        raise InvalidLocationError(f"no such location: {to}")
    if not tuple(frm) <= tuple(to):
        raise InvalidLocationError(f"{frm} does not precede {to}")
    return Program(tuple(_path(p, tuple(frm), tuple(to))), p.symbols, ())


def backprop(f: Expr, p: Program, l: Location, lp: Location) -> Expr:
    """Carry f backwards from l to an earlier point lp."""
    return wp(f, path_extract(p, lp, l))


def forwardprop(f: Expr, p: Program, l: Location, lp: Location) -> Expr:
    """Carry f forwards from l to a later point lp."""
    return sp(f, path_extract(p, l, lp))


def strengthen(p: Program, l: Location, xi: Expr) -> Program:
    """Conjoin xi onto the invariant of the loop at l."""
    cur = instruction_at(p, l)
    if not isinstance(cur, While):
        raise InvalidLocationError(f"no loop at {l}")
    return set_invariant(p, l, conj(cur.invariant, xi))


# ---------------------------------------------------------------------------
# Search state


@dataclass
class SynthesisStats:
    candidates_tried: int = 0
    timed_out: bool = False


@dataclass(frozen=True)
class DeepeningSchedule:
    levels: tuple[SearchBudget, ...]

    @classmethod
    def default(
        cls,
        disjuncts: int = 1,
        max_depth: int = 2,
        max_size: int = 2,
        node_limit: int = 5000,
    ) -> "DeepeningSchedule":
        steps = [(1, 1), (1, 2), (2, 2)]
        picked = [(d, s) for d, s in steps if d <= max_depth and s <= max_size]
        if (max_depth, max_size) not in picked:
            picked.append((max_depth, max_size))
        return cls(
            tuple(
                SearchBudget(
                    max_implicant_size=s,
                    max_abducible_depth=d,
                    disjuncts=disjuncts,
                    node_limit=node_limit,
                )
                for d, s in picked
            )
        )


class _OutOfTime(Exception):
    pass


@dataclass
class _State:
    vc_sess: SolverSession
    abd_sess: SolverSession
    stats: SynthesisStats
    tried: set = field(default_factory=set)
    deadline: float | None = None
    trace: object = None

    def check_deadline(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _OutOfTime

    def emit(self, loc: Location, xi: Expr, verdict: Verdict):
        if self.trace is not None:
            calls = self.vc_sess.stats.solver_calls + self.abd_sess.stats.solver_calls
            self.trace(loc, render_expr(xi), verdict.value, calls)


def _entails(sess: SolverSession, a: Expr, b: Expr) -> bool:
    return sess.check_sat([a, neg(b)], want_model=False).status is Status.UNSAT


def _init_verdict(q: Program, lp: Location, st: _State) -> Verdict:
    worst = Verdict.VALID
    for v in vcgen(q).preconditions.get(lp, []):
        verdict = check_vc(v, st.vc_sess)
        if verdict is Verdict.INVALID:
            return Verdict.INVALID
        if verdict is Verdict.UNKNOWN:
            worst = Verdict.UNKNOWN
    return worst


def _attempt(p: Program, lp: Location, xi: Expr, st: _State) -> Program | None:
    """Strengthen the loop at lp with xi if it is new and survives the
    entry-condition filter; None otherwise."""
    current = instruction_at(p, lp).invariant
    if _entails(st.vc_sess, current, xi):
        return None  # adds nothing to what the invariant already says
    q = strengthen(p, lp, xi)
    key = (tuple(lp), render_expr(instruction_at(q, lp).invariant))
    if key in st.tried:
        return None
    st.tried.add(key)
    st.stats.candidates_tried += 1
    verdict = _init_verdict(q, lp, st)
    st.emit(lp, xi, verdict)
    if verdict is not Verdict.VALID:
        return None
    return q


# ---------------------------------------------------------------------------
# Inductiveness repair


def ind(p: Program, l: Location, budget: SearchBudget, st: _State) -> Program | None:
    """Make the invariants of the loop at l (and every loop below it)
    inductive again, strengthening nested loops as needed."""
    st.check_deadline()
    vs = vcgen(p)
    failing = None
    for d in sorted(vs.propagation):
        if not l.is_prefix_of(d):
            continue
        for v in vs.propagation[d]:
            if check_vc(v, st.vc_sess) is not Verdict.VALID:
                failing = (d, v)
                break
        if failing:
            break
    if failing is None:
        return p
    d, phi = failing
    targets = [lp for lp in loop_locations(p) if d.is_prefix_of(lp)]
    for xi in abduce(phi, p, d, budget, st.abd_sess):
        if xi is BUDGET_EXHAUSTED:
            break
        for lp in targets:
            st.check_deadline()
            try:
                xi_p = forwardprop(xi, p, d, lp)
            except InvalidLocationError:
                continue
            q = _attempt(p, lp, xi_p, st)
            if q is None:
                continue
            r = ind(q, l, budget, st)
            if r is not None:
                return r
    return None


# ---------------------------------------------------------------------------
# Main search


def _all_valid(p: Program, sess: SolverSession) -> bool:
    return all(check_vc(v, sess) is Verdict.VALID for v in vcgen(p).all_vcs())


def _ilinva(p: Program, budget: SearchBudget, st: _State) -> Program | None:
    st.check_deadline()
    vs = vcgen(p)
    failing = [v for v in vs.assertions if check_vc(v, st.vc_sess) is not Verdict.VALID]
    if not failing:
        return p
    if any(not v.depends_on for v in failing):
        return None  # an assertion no loop can influence cannot be repaired
    phi = min(failing, key=lambda v: tuple(v.origin))
    l = max(phi.depends_on, key=tuple)
    candidate_loops = sorted(
        (lp for lp in loop_locations(p) if tuple(lp) <= tuple(l)),
        key=tuple,
        reverse=True,
    )
    for xi in abduce(phi, p, l, budget, st.abd_sess):
        if xi is BUDGET_EXHAUSTED:
            break
        for lp in candidate_loops:
            st.check_deadline()
            try:
                xi_p = backprop(xi, p, l, lp)
            except InvalidLocationError:
                continue
            q = _attempt(p, lp, xi_p, st)
            if q is None:
                continue
            q2 = ind(q, lp, budget, st)
            if q2 is None:
                continue
            r = _ilinva(q2, budget, st)
            if r is not None:
                return r
    return None


def ilinva(
    p: Program,
    schedule: DeepeningSchedule,
    sess: SolverSession,
    abduce_sess: SolverSession | None = None,
    deadline: float | None = None,
    trace=None,
    stats: SynthesisStats | None = None,
) -> Program | None:
    """Search for invariants making every condition of p valid.

    Returns the annotated program, or None when the schedule or the
    deadline is exhausted.  Assumes p's initial invariants already hold on
    entry and propagate (callers check this).
    """
    if stats is None:
        stats = SynthesisStats()
    abd = abduce_sess if abduce_sess is not None else sess
    try:
        for budget in schedule.levels:
            st = _State(
                vc_sess=sess,
                abd_sess=abd,
                stats=stats,
                deadline=deadline,
                trace=trace,
            )
            result = _ilinva(p, budget, st)
            if result is not None and _all_valid(result, sess):
                return result
    except _OutOfTime:
        stats.timed_out = True
    return None
