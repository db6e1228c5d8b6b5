"""Random instance builders shared by the property and acceptance tests.

Everything is driven by an explicit random.Random so failures reproduce from
a seed alone.
"""

from __future__ import annotations

import random

from invforge.abduce import Abducible, AbduciblePool
from invforge.lang import (
    Assert,
    Assign,
    Assume,
    BinArith,
    Cmp,
    Expr,
    Havoc,
    If,
    IntLit,
    Program,
    Sort,
    SymbolTable,
    TRUE,
    Var,
    While,
    complement,
    conj,
    disj,
    implies,
    neg,
)

INT_VARS = ("x", "y", "z")


def int_symbols() -> SymbolTable:
    table = SymbolTable()
    for name in INT_VARS:
        table.declare_var(name, Sort.INT)
    return table


def linear_term(rng: random.Random) -> Expr:
    """c or v or v +- c or v +- v, coefficients kept small."""
    pick = rng.randrange(4)
    v = Var(rng.choice(INT_VARS), Sort.INT)
    if pick == 0:
        return IntLit(rng.randint(-3, 3))
    if pick == 1:
        return v
    if pick == 2:
        return BinArith(rng.choice("+-"), v, IntLit(rng.randint(1, 3)))
    return BinArith(rng.choice("+-"), v, Var(rng.choice(INT_VARS), Sort.INT))


def atom(rng: random.Random) -> Expr:
    op = rng.choice(("=", "<", "<=", ">", ">="))
    return Cmp(op, linear_term(rng), linear_term(rng))


def linear_formula(rng: random.Random, depth: int = 2) -> Expr:
    if depth == 0 or rng.random() < 0.4:
        return atom(rng)
    pick = rng.randrange(4)
    a = linear_formula(rng, depth - 1)
    b = linear_formula(rng, depth - 1)
    if pick == 0:
        return conj(a, b)
    if pick == 1:
        return disj(a, b)
    if pick == 2:
        return implies(a, b)
    return neg(a)


def loop_free_program(rng: random.Random, max_instrs: int = 6) -> Program:
    """Straight-line/branching program over three integers; no asserts, so
    the wp/sp duality holds instruction by instruction."""
    symbols = int_symbols()

    def instr(budget: int):
        pick = rng.randrange(5 if budget >= 3 else 4)
        if pick == 0:
            return Assume(linear_formula(rng, 1)), 1
        if pick == 1:
            return Assign(rng.choice(INT_VARS), linear_term(rng)), 1
        if pick == 2:
            return Assign(rng.choice(INT_VARS), linear_term(rng)), 1
        if pick == 3:
            return Havoc(rng.choice(INT_VARS)), 1
        then, used_t = block(budget - 1)
        orelse, used_e = block(budget - 1 - used_t)
        return If(linear_formula(rng, 1), then, orelse), 1 + used_t + used_e

    def block(budget: int):
        out = []
        used = 0
        while used < budget and rng.random() < 0.7:
            ins, cost = instr(budget - used)
            out.append(ins)
            used += cost
        return tuple(out), used

    n = rng.randint(1, max_instrs)
    body, _ = block(n)
    if not body:
        body = (Assign(rng.choice(INT_VARS), linear_term(rng)),)
    return Program(body, symbols, ())


def full_program(rng: random.Random) -> Program:
    """Arbitrary small program: loops, branches, asserts, a boolean flag.

    Formulas are built only through the smart constructors, matching what
    the parser itself produces, so rendering and re-parsing must return the
    identical tree.
    """
    symbols = int_symbols()
    symbols.declare_var("b", Sort.BOOL)

    def term(depth=1):
        pick = rng.randrange(5 if depth else 3)
        if pick == 0:
            return IntLit(rng.randint(-9, 9))
        if pick == 1 or pick == 2:
            return Var(rng.choice(INT_VARS), Sort.INT)
        op = rng.choice("+-*")
        return BinArith(op, term(depth - 1), term(depth - 1))

    def formula(depth=2):
        if depth == 0 or rng.random() < 0.45:
            if rng.random() < 0.2:
                return Var("b", Sort.BOOL)
            return Cmp(rng.choice(("=", "<", "<=", ">", ">=")), term(), term())
        kids = [formula(depth - 1) for _ in range(2)]
        pick = rng.randrange(4)
        if pick == 0:
            return conj(*kids)
        if pick == 1:
            return disj(*kids)
        if pick == 2:
            return implies(kids[0], kids[1])
        return neg(kids[0])

    def instr(depth):
        pick = rng.randrange(7 if depth else 5)
        if pick == 0:
            return Assume(formula(1))
        if pick == 1:
            return Assert(formula(1))
        if pick == 2:
            if rng.random() < 0.25:
                value = rng.choice([formula(1), Var("b", Sort.BOOL)])
                return Assign("b", value)
            return Assign(rng.choice(INT_VARS), term())
        if pick == 3:
            return Havoc(rng.choice(INT_VARS + ("b",)))
        if pick == 4:
            return Assign(rng.choice(INT_VARS), term())
        if pick == 5:
            return If(formula(1), block(depth - 1), block(depth - 1))
        invariant = formula(1) if rng.random() < 0.5 else TRUE
        return While(formula(1), block(depth - 1), invariant)

    def block(depth):
        return tuple(instr(depth) for _ in range(rng.randint(0, 3)))

    body = tuple(instr(2) for _ in range(rng.randint(1, 5)))
    return Program(body, symbols, ())


def abduction_instance(rng: random.Random):
    """A pool of 8 literals (4 atoms and their complements) over x, y, z and
    a goal that at least one consistent pool literal entails on its own."""
    atoms = []
    while len(atoms) < 4:
        v = Var(rng.choice(INT_VARS), Sort.INT)
        if rng.random() < 0.5:
            other = Cmp(rng.choice(("=", "<", "<=")), v, IntLit(rng.randint(-2, 2)))
        else:
            w = Var(rng.choice([n for n in INT_VARS if n != v.name]), Sort.INT)
            other = Cmp(rng.choice(("=", "<", "<=")), v, w)
        if other not in atoms:
            atoms.append(other)
    literals = []
    for a in atoms:
        literals.append(a)
        literals.append(complement(a))
    pool = AbduciblePool(
        tuple(Abducible(l, i, 1) for i, l in enumerate(literals)),
        INT_VARS,
        (),
        1,
    )
    # a single literal disjoined with noise: that literal is a consistent,
    # size-1 entailing subset, so completeness has something to find
    seed_lit = rng.choice(literals)
    goal = disj(seed_lit, atom(rng))
    return pool, goal
