"""Predicate-transformer calculi and verification condition generation.

Three kinds of conditions are produced for an annotated program: one per
assert (the forward state so far must force the asserted formula), one per
loop stating that its invariant holds on entry, and one per loop stating
that the invariant propagates through the body.  Forward states are built
with the strongest-postcondition calculus, summarizing each loop by its
invariant and the negated condition.  The weakest-precondition calculus is
the backward counterpart; the universal closure its while rule needs is
realized by renaming every body-modified variable to a fresh symbol, which
keeps all queries quantifier-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .lang import (
    Assert,
    Assign,
    Assume,
    Block,
    Cmp,
    Expr,
    Havoc,
    If,
    Location,
    Program,
    Sort,
    SymbolTable,
    TRUE,
    Var,
    While,
    assigned_variables,
    conj,
    disj,
    implies,
    neg,
    sort_of,
    substitute,
)
from .solver import SolverSession, Status


class VcKind(Enum):
    ASSERTION = "assertion"
    PROPAGATION = "propagation"
    LOOP_PRECONDITION = "loop-precondition"


@dataclass(frozen=True)
class Vc:
    id: str
    kind: VcKind
    antecedent: Expr
    consequent: Expr
    depends_on: frozenset
    origin: Location


@dataclass
class VcSet:
    assertions: list[Vc]
    propagation: dict[Location, list[Vc]]
    preconditions: dict[Location, list[Vc]]

    def all_vcs(self):
        yield from self.assertions
        for loc in sorted(self.preconditions):
            yield from self.preconditions[loc]
        for loc in sorted(self.propagation):
            yield from self.propagation[loc]


class Verdict(Enum):
    VALID = "valid"
    INVALID = "invalid"
    UNKNOWN = "unknown"


def _iff(a: Expr, b: Expr) -> Expr:
    return conj(implies(a, b), implies(b, a))


def _fresh_var(symbols: SymbolTable, base: str) -> Var:
    sort = symbols.sort(base)
    if sort is None:
        sort = Sort.INT
    return Var(symbols.fresh(base.lstrip("_"), sort), sort)


def _assign_equation(target: Var, value: Expr) -> Expr:
    if sort_of(value) is Sort.BOOL:
        return _iff(target, value)
    return Cmp("=", target, value)


# ---------------------------------------------------------------------------
# Weakest preconditions


def wp(f: Expr, p: Program) -> Expr:
    return _wp_block(f, p.body, p.symbols)


def _wp_block(f: Expr, block: Block, symbols: SymbolTable) -> Expr:
    for instr in reversed(block):
        f = _wp_instr(f, instr, symbols)
    return f


def _wp_instr(f: Expr, instr, symbols: SymbolTable) -> Expr:
    if isinstance(instr, Assume):
        return implies(instr.formula, f)
    if isinstance(instr, Assert):
        return conj(instr.formula, f)
    if isinstance(instr, Assign):
        return substitute(f, {instr.target: instr.value})
    if isinstance(instr, Havoc):
        return substitute(f, {instr.target: _fresh_var(symbols, instr.target)})
    if isinstance(instr, If):
        return conj(
            implies(instr.cond, _wp_block(f, instr.then, symbols)),
            implies(neg(instr.cond), _wp_block(f, instr.orelse, symbols)),
        )
    if isinstance(instr, While):
        psi, cond = instr.invariant, instr.cond
        preserved = implies(conj(psi, cond), _wp_block(psi, instr.body, symbols))
        exits = implies(conj(psi, neg(cond)), f)
        return conj(
            psi,
            _rename_modified(preserved, instr.body, symbols),
            _rename_modified(exits, instr.body, symbols),
        )
    raise TypeError(f"unknown instruction {instr!r}")


def _rename_modified(f: Expr, body: Block, symbols: SymbolTable) -> Expr:
    """Universal closure over body-modified variables, by fresh renaming."""
    mapping = {
        name: _fresh_var(symbols, name) for name in sorted(assigned_variables(body))
    }
    return substitute(f, mapping) if mapping else f


# ---------------------------------------------------------------------------
# Strongest postconditions


def sp(f: Expr, p: Program) -> Expr:
    return _sp_block(f, p.body, p.symbols)


def _sp_block(f: Expr, block: Block, symbols: SymbolTable) -> Expr:
    for instr in block:
        f = _sp_instr(f, instr, symbols)
    return f


def _sp_instr(f: Expr, instr, symbols: SymbolTable) -> Expr:
    if isinstance(instr, Assume):
        return conj(f, instr.formula)
    if isinstance(instr, Assert):
        return f
    if isinstance(instr, Assign):
        sort = symbols.sort(instr.target)
        target = Var(instr.target, sort)
        old = _fresh_var(symbols, instr.target)
        shifted = {instr.target: old}
        return conj(
            substitute(f, shifted),
            _assign_equation(target, substitute(instr.value, shifted)),
        )
    if isinstance(instr, Havoc):
        return substitute(f, {instr.target: _fresh_var(symbols, instr.target)})
    if isinstance(instr, If):
        return disj(
            _sp_block(conj(f, instr.cond), instr.then, symbols),
            _sp_block(conj(f, neg(instr.cond)), instr.orelse, symbols),
        )
    if isinstance(instr, While):
        # the loop summary replaces the incoming state entirely
        return conj(instr.invariant, neg(instr.cond))
    raise TypeError(f"unknown instruction {instr!r}")


# ---------------------------------------------------------------------------
# Verification conditions


def vcgen(p: Program) -> VcSet:
    out = VcSet([], {}, {})
    axioms = conj(*p.axioms)
    _walk(p.body, (), TRUE, frozenset(), out, p.symbols, axioms)
    return out


def _walk(block, prefix, running, deps, out, symbols, axioms):
    """Forward pass; returns the state and summary-dependencies at block end."""
    for idx, instr in enumerate(block):
        loc = Location(prefix + (idx,))
        if isinstance(instr, Assume):
            running = conj(running, instr.formula)
        elif isinstance(instr, Assert):
            out.assertions.append(
                Vc(
                    id=f"a:{loc}",
                    kind=VcKind.ASSERTION,
                    antecedent=conj(axioms, running),
                    consequent=instr.formula,
                    depends_on=deps,
                    origin=loc,
                )
            )
        elif isinstance(instr, (Assign, Havoc)):
            running = _sp_instr(running, instr, symbols)
        elif isinstance(instr, If):
            then_r, then_d = _walk(
                instr.then, tuple(loc) + (1,), conj(running, instr.cond),
                deps, out, symbols, axioms,
            )
            else_r, else_d = _walk(
                instr.orelse, tuple(loc) + (2,), conj(running, neg(instr.cond)),
                deps, out, symbols, axioms,
            )
            running = disj(then_r, else_r)
            deps = then_d | else_d
        elif isinstance(instr, While):
            psi, cond = instr.invariant, instr.cond
            out.preconditions[loc] = [
                Vc(
                    id=f"init:{loc}",
                    kind=VcKind.LOOP_PRECONDITION,
                    antecedent=conj(axioms, running),
                    consequent=psi,
                    depends_on=deps,
                    origin=loc,
                )
            ]
            body_running, body_deps = _walk(
                instr.body, tuple(loc) + (1,), conj(psi, cond),
                frozenset({loc}), out, symbols, axioms,
            )
            out.propagation[loc] = [
                Vc(
                    id=f"ind:{loc}#0",
                    kind=VcKind.PROPAGATION,
                    antecedent=conj(axioms, body_running),
                    consequent=psi,
                    depends_on=frozenset({loc}) | body_deps,
                    origin=loc,
                )
            ]
            running = conj(psi, neg(cond))
            deps = frozenset({loc})
        else:
            raise TypeError(f"unknown instruction {instr!r}")
    return running, deps


def check_vc(v: Vc, sess: SolverSession) -> Verdict:
    result = sess.check_sat([v.antecedent, neg(v.consequent)], want_model=False)
    if result.status is Status.UNSAT:
        return Verdict.VALID
    if result.status is Status.SAT:
        return Verdict.INVALID
    return Verdict.UNKNOWN
