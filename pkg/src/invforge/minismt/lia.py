"""Exact feasibility of linear integer constraint systems (the Omega test).

A linear expression is a coefficient map plus a constant.  Systems consist of
equalities (lin = 0), inequalities (lin >= 0) and disequalities (lin != 0).
Equalities are eliminated first (unit-coefficient solving, with the
symmetric-modulus reduction when no unit coefficient exists), then variables
are projected out of the inequalities pair by pair: the real shadow is exact
when a bound coefficient is 1, the dark shadow proves feasibility otherwise,
and the splinter equalities cover the gap, so the procedure decides integer
feasibility exactly.  Every elimination is recorded so a full integer model
can be rebuilt by back-substitution.
"""

from __future__ import annotations

import time
from math import gcd


class Timeout(Exception):
    pass


class Lin:
    """Sum of coeff * var plus a constant, over integer variables."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: dict[str, int] | None = None, const: int = 0):
        self.coeffs = {v: c for v, c in (coeffs or {}).items() if c != 0}
        self.const = const

    def copy(self) -> "Lin":
        return Lin(dict(self.coeffs), self.const)

    def add(self, other: "Lin") -> "Lin":
        coeffs = dict(self.coeffs)
        for v, c in other.coeffs.items():
            coeffs[v] = coeffs.get(v, 0) + c
        return Lin(coeffs, self.const + other.const)

    def scale(self, k: int) -> "Lin":
        return Lin({v: c * k for v, c in self.coeffs.items()}, self.const * k)

    def sub(self, other: "Lin") -> "Lin":
        return self.add(other.scale(-1))

    def shift(self, k: int) -> "Lin":
        return Lin(dict(self.coeffs), self.const + k)

    def drop(self, var: str) -> "Lin":
        coeffs = dict(self.coeffs)
        coeffs.pop(var, None)
        return Lin(coeffs, self.const)

    def subst(self, var: str, repl: "Lin") -> "Lin":
        c = self.coeffs.get(var)
        if c is None:
            return self
        return self.drop(var).add(repl.scale(c))

    def eval(self, model: dict[str, int]) -> int:
        return self.const + sum(c * model.get(v, 0) for v, c in self.coeffs.items())

    def key(self):
        return (tuple(sorted(self.coeffs.items())), self.const)

    def __repr__(self):
        parts = [f"{c}*{v}" for v, c in sorted(self.coeffs.items())]
        parts.append(str(self.const))
        return " + ".join(parts)


def _coeff_gcd(lin: Lin) -> int:
    g = 0
    for c in lin.coeffs.values():
        g = gcd(g, abs(c))
    return g


def _symmetric_mod(a: int, m: int) -> int:
    r = a % m
    if r > m // 2:
        r -= m
    return r


class _State:
    def __init__(self, deadline: float | None, used: set[str]):
        self.deadline = deadline
        self.fresh = 0
        self.used = used

    def check_time(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise Timeout()

    def fresh_var(self) -> str:
        while True:
            self.fresh += 1
            name = f"_omega_{self.fresh}"
            if name not in self.used:
                self.used.add(name)
                return name


def _eliminate_equalities(eqs, ges, trail, st):
    """Reduce to an inequality-only system; None when contradictory."""
    eqs = [e.copy() for e in eqs]
    while eqs:
        st.check_time()
        eq = eqs.pop()
        if not eq.coeffs:
            if eq.const != 0:
                return None
            continue
        g = _coeff_gcd(eq)
        if eq.const % g != 0:
            return None
        if g > 1:
            eq = Lin({v: c // g for v, c in eq.coeffs.items()}, eq.const // g)
        unit = next((v for v, c in eq.coeffs.items() if abs(c) == 1), None)
        if unit is not None:
            a = eq.coeffs[unit]
            # a*x + rest = 0  =>  x = -rest / a, with a in {1, -1}
            repl = eq.drop(unit).scale(-a)
            eqs = [e.subst(unit, repl) for e in eqs]
            for i, ge in enumerate(ges):
                ges[i] = ge.subst(unit, repl)
            trail.append(("subst", unit, repl))
            continue
        # no unit coefficient: symmetric-modulus reduction
        var = min(eq.coeffs, key=lambda v: (abs(eq.coeffs[v]), v))
        a = eq.coeffs[var]
        s = 1 if a > 0 else -1
        m = abs(a) + 1
        sigma = st.fresh_var()
        hat = Lin(
            {v: _symmetric_mod(c, m) for v, c in eq.coeffs.items()},
            _symmetric_mod(eq.const, m),
        )
        # hat coefficient of var is -s, so: x = s * (hat-without-x - m*sigma)
        repl = hat.drop(var).add(Lin({sigma: -m})).scale(s)
        eqs.append(eq.subst(var, repl))
        for j, e in enumerate(eqs[:-1]):
            eqs[j] = e.subst(var, repl)
        for i, ge in enumerate(ges):
            ges[i] = ge.subst(var, repl)
        trail.append(("subst", var, repl))
    return ges


def _tighten(ge: Lin) -> Lin | None:
    """Divide by the coefficient gcd, flooring the constant; None if constant-false."""
    if not ge.coeffs:
        return ge if ge.const >= 0 else None
    g = _coeff_gcd(ge)
    if g > 1:
        ge = Lin({v: c // g for v, c in ge.coeffs.items()}, ge.const // g)
    return ge


def _project(ges, trail, st):
    """Eliminate all variables from inequalities; model via trail, None if unsat."""
    st.check_time()
    work = []
    for ge in ges:
        t = _tighten(ge)
        if t is None:
            return None
        if t.coeffs:
            work.append(t)
    if not work:
        return {}

    vars_here = sorted({v for ge in work for v in ge.coeffs})
    # prefer the variable with the fewest lower*upper pairings
    def cost(v):
        lo = sum(1 for ge in work if ge.coeffs.get(v, 0) > 0)
        hi = sum(1 for ge in work if ge.coeffs.get(v, 0) < 0)
        return (lo * hi, v)

    var = min(vars_here, key=cost)
    lowers = []  # (a, alpha): a*var >= alpha
    uppers = []  # (b, beta):  b*var <= beta
    rest = []
    for ge in work:
        c = ge.coeffs.get(var, 0)
        if c > 0:
            lowers.append((c, ge.drop(var).scale(-1)))
        elif c < 0:
            uppers.append((-c, ge.drop(var)))
        else:
            rest.append(ge)

    if not lowers or not uppers:
        trail.append(("bounds", var, lowers, uppers))
        return _project(rest, trail, st)

    shadows = list(rest)
    all_exact = True
    for a, alpha in lowers:
        for b, beta in uppers:
            st.check_time()
            gap = beta.scale(a).sub(alpha.scale(b))
            if a > 1 and b > 1:
                all_exact = False
                gap = gap.shift(-(a - 1) * (b - 1))
            shadows.append(gap)

    sub_trail = []
    model = _project(shadows, sub_trail, st)
    if model is not None:
        # elimination order: var first, then the shadow system's variables
        trail.append(("bounds", var, lowers, uppers))
        trail.extend(sub_trail)
        return model
    if all_exact:
        return None

    # dark shadow failed with coefficients > 1: try the splinter equalities
    b_max = max(b for b, _ in uppers)
    for a, alpha in lowers:
        if a == 1:
            continue
        limit = (a * b_max - a - b_max) // b_max
        for i in range(limit + 1):
            st.check_time()
            # a*var = alpha + i
            eq = Lin({var: a}).sub(alpha).shift(-i)
            sub_trail = []
            ges2 = _eliminate_equalities([eq], [g.copy() for g in work], sub_trail, st)
            if ges2 is None:
                continue
            model = _project(ges2, sub_trail, st)
            if model is not None:
                trail.extend(sub_trail)
                return model
    return None


def _replay(trail, model):
    values = dict(model)
    for event in reversed(trail):
        if event[0] == "subst":
            _, var, repl = event
            values[var] = repl.eval(values)
        else:
            _, var, lowers, uppers = event
            los = [-((-alpha.eval(values)) // a) for a, alpha in lowers]
            his = [beta.eval(values) // b for b, beta in uppers]
            if los and his and max(los) > min(his):
                raise AssertionError("shadow projection produced an empty range")
            if los:
                values[var] = max(los)
            elif his:
                values[var] = min(his)
            else:
                values[var] = 0
    return values


def solve(eqs, ges, neqs=(), deadline: float | None = None):
    """A model of the system as a dict, or None when infeasible.

    Variables not mentioned by any constraint are absent from the model;
    callers treat missing variables as 0.
    """
    used = {v for lin in (*eqs, *ges, *neqs) for v in lin.coeffs}
    st = _State(deadline, used)
    trail: list = []
    ges2 = _eliminate_equalities(list(eqs), [g.copy() for g in ges], trail, st)
    if ges2 is None:
        return None
    model = _project(ges2, trail, st)
    if model is None:
        return None
    values = _replay(trail, model)
    for neq in neqs:
        if neq.eval(values) == 0:
            # split x != 0 into x <= -1 or x >= 1
            for extra in (neq.scale(-1).shift(-1), neq.shift(-1)):
                st.check_time()
                result = solve(eqs, list(ges) + [extra], neqs, deadline)
                if result is not None:
                    return result
            return None
    return values
