"""Satisfiability of quantifier-free formulas over integers, booleans and
uninterpreted functions.

Each check is self-contained: the asserted forms are encoded to CNF over a
set of theory atoms (linear constraints, canonicalized so an atom and its
negation share one propositional variable), function applications are
replaced by instance variables with pairwise congruence clauses, and
non-constant products are abstracted to fresh integers.  A DPLL search
assigns the propositional skeleton, consulting the integer solver at every
decision level and learning a minimized blocking clause from each theory
conflict.  Satisfying assignments are validated against the original
products; a model that cannot be repaired downgrades the answer to unknown,
so "sat" and "unsat" answers are always trustworthy.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import gcd

from . import lia
from .lia import Lin


class EngineError(Exception):
    """Ill-formed input: unknown symbol, arity or sort mismatch."""


@dataclass(frozen=True)
class Declaration:
    name: str
    arg_sorts: tuple[str, ...]
    ret_sort: str


@dataclass
class FunTable:
    arg_sorts: tuple[str, ...]
    ret_sort: str
    entries: list[tuple[tuple, object]]
    default: object


@dataclass
class Result:
    status: str  # "sat" | "unsat" | "unknown"
    reason: str | None = None  # for unknown: "timeout" | "incomplete"
    int_values: dict[str, int] = field(default_factory=dict)
    bool_values: dict[str, bool] = field(default_factory=dict)
    fun_tables: dict[str, FunTable] = field(default_factory=dict)


def _freeze(form):
    if isinstance(form, list):
        return tuple(_freeze(x) for x in form)
    return form


def _is_atom_name(form) -> bool:
    return isinstance(form, str)


def sort_of_form(form, decls: dict[str, Declaration]) -> str:
    """Sort of a term, raising EngineError on any ill-formed subterm."""
    if isinstance(form, bool):
        raise EngineError("unexpected python bool in form")
    if isinstance(form, int):
        return "Int"
    if isinstance(form, str):
        if form in ("true", "false"):
            return "Bool"
        decl = decls.get(form)
        if decl is None:
            raise EngineError(f"unknown constant {form}")
        if decl.arg_sorts:
            raise EngineError(f"{form} expects {len(decl.arg_sorts)} arguments")
        return decl.ret_sort
    if not isinstance(form, list) or not form or not isinstance(form[0], str):
        raise EngineError(f"cannot type {form!r}")
    head, args = form[0], form[1:]
    if head in ("and", "or"):
        for a in args:
            _expect(a, "Bool", decls)
        return "Bool"
    if head == "not":
        _need_arity(form, 1)
        _expect(args[0], "Bool", decls)
        return "Bool"
    if head == "=>":
        if len(args) < 2:
            raise EngineError("=> needs at least 2 arguments")
        for a in args:
            _expect(a, "Bool", decls)
        return "Bool"
    if head in ("=", "distinct"):
        if len(args) < 2:
            raise EngineError(f"{head} needs at least 2 arguments")
        s = sort_of_form(args[0], decls)
        for a in args[1:]:
            _expect(a, s, decls)
        return "Bool"
    if head in ("<", "<=", ">", ">="):
        if len(args) < 2:
            raise EngineError(f"{head} needs at least 2 arguments")
        for a in args:
            _expect(a, "Int", decls)
        return "Bool"
    if head in ("+", "*"):
        if not args:
            raise EngineError(f"{head} needs arguments")
        for a in args:
            _expect(a, "Int", decls)
        return "Int"
    if head == "-":
        if not args:
            raise EngineError("- needs arguments")
        for a in args:
            _expect(a, "Int", decls)
        return "Int"
    if head == "ite":
        _need_arity(form, 3)
        _expect(args[0], "Bool", decls)
        s = sort_of_form(args[1], decls)
        _expect(args[2], s, decls)
        return s
    decl = decls.get(head)
    if decl is None:
        raise EngineError(f"unknown function {head}")
    if len(args) != len(decl.arg_sorts):
        raise EngineError(f"{head} expects {len(decl.arg_sorts)} arguments")
    for a, s in zip(args, decl.arg_sorts):
        _expect(a, s, decls)
    return decl.ret_sort


def _expect(form, sort: str, decls):
    got = sort_of_form(form, decls)
    if got != sort:
        raise EngineError(f"expected {sort}, got {got} for {form!r}")


def _need_arity(form, n: int):
    if len(form) != n + 1:
        raise EngineError(f"{form[0]} expects {n} arguments")


class Timeout(Exception):
    pass


TRUE_LIT = 1


class _Encoder:
    def __init__(self, decls: dict[str, Declaration], deadline: float | None):
        self.decls = decls
        self.deadline = deadline
        self.nvars = 1  # variable 1 is reserved and forced true
        self.clauses: list[list[int]] = [[TRUE_LIT]]
        self.cache: dict[tuple, int] = {}
        self.atom_vars: dict[tuple, int] = {}
        self.atoms: dict[int, tuple] = {}  # var -> ("ge"|"eq", Lin) | ("bool", name)
        # fname -> list of (arg_lins, instance) where instance is a var name
        # for int-valued functions and a propositional variable otherwise
        self.instances: dict[str, list[tuple[tuple[Lin, ...], object]]] = {}
        self.instance_index: dict[tuple, int] = {}
        self.counter = 0
        # products in creation order; factors of later entries may be earlier ones
        self.products: list[tuple[str, Lin, Lin]] = []
        self.product_index: dict[tuple, str] = {}

    def _tick(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise Timeout()

    def new_var(self) -> int:
        self.nvars += 1
        return self.nvars

    # ----- terms -----

    def linearize(self, form) -> Lin:
        self._tick()
        if isinstance(form, int):
            return Lin(const=form)
        if isinstance(form, str):
            decl = self.decls.get(form)
            if decl is None or decl.arg_sorts or decl.ret_sort != "Int":
                raise EngineError(f"expected an integer constant, got {form!r}")
            return Lin({form: 1})
        if not isinstance(form, list) or not form:
            raise EngineError(f"bad term {form!r}")
        head, args = form[0], form[1:]
        if head == "+":
            out = Lin()
            for a in args:
                out = out.add(self.linearize(a))
            return out
        if head == "-":
            if len(args) == 1:
                return self.linearize(args[0]).scale(-1)
            out = self.linearize(args[0])
            for a in args[1:]:
                out = out.sub(self.linearize(a))
            return out
        if head == "*":
            out = self.linearize(args[0])
            for a in args[1:]:
                out = self._mul(out, self.linearize(a))
            return out
        decl = self.decls.get(head)
        if decl is not None and decl.arg_sorts and decl.ret_sort == "Int":
            return Lin({self._instance(head, decl, args): 1})
        raise EngineError(f"unsupported integer term {form!r}")

    def _mul(self, a: Lin, b: Lin) -> Lin:
        if not a.coeffs:
            return b.scale(a.const)
        if not b.coeffs:
            return a.scale(b.const)
        ka, kb = sorted((a.key(), b.key()))
        name = self.product_index.get((ka, kb))
        if name is None:
            self.counter += 1
            name = f"_nl_{self.counter}"
            self.product_index[(ka, kb)] = name
            if ka == a.key():
                self.products.append((name, a, b))
            else:
                self.products.append((name, b, a))
        return Lin({name: 1})

    def _instance(self, fname: str, decl: Declaration, args):
        arg_lins = []
        for a, s in zip(args, decl.arg_sorts):
            if s != "Int":
                raise EngineError(f"{fname}: only integer arguments are supported")
            arg_lins.append(self.linearize(a))
        arg_lins = tuple(arg_lins)
        key = (fname, tuple(l.key() for l in arg_lins))
        idx = self.instance_index.get(key)
        if idx is not None:
            return self.instances[fname][idx][1]
        if decl.ret_sort == "Int":
            self.counter += 1
            inst = f"_ack_{fname}_{self.counter}"
        else:
            inst = self.new_var()
        bucket = self.instances.setdefault(fname, [])
        self.instance_index[key] = len(bucket)
        bucket.append((arg_lins, inst))
        return inst

    # ----- atoms -----

    def _atom_ge(self, lin: Lin) -> int:
        """Literal for lin >= 0."""
        if not lin.coeffs:
            return TRUE_LIT if lin.const >= 0 else -TRUE_LIT
        g = 0
        for c in lin.coeffs.values():
            g = gcd(g, abs(c))
        if g > 1:
            lin = Lin({v: c // g for v, c in lin.coeffs.items()}, lin.const // g)
        first = min(lin.coeffs)
        if lin.coeffs[first] > 0:
            rep, pol = lin, 1
        else:
            rep = Lin({v: -c for v, c in lin.coeffs.items()}, -lin.const - 1)
            pol = -1
        key = ("ge", rep.key())
        var = self.atom_vars.get(key)
        if var is None:
            var = self.new_var()
            self.atom_vars[key] = var
            self.atoms[var] = ("ge", rep)
        return pol * var

    def _atom_eq(self, lin: Lin) -> int:
        """Literal for lin = 0."""
        if not lin.coeffs:
            return TRUE_LIT if lin.const == 0 else -TRUE_LIT
        g = 0
        for c in lin.coeffs.values():
            g = gcd(g, abs(c))
        if lin.const % g != 0:
            return -TRUE_LIT
        if g > 1:
            lin = Lin({v: c // g for v, c in lin.coeffs.items()}, lin.const // g)
        first = min(lin.coeffs)
        if lin.coeffs[first] < 0:
            lin = lin.scale(-1)
        key = ("eq", lin.key())
        var = self.atom_vars.get(key)
        if var is None:
            var = self.new_var()
            self.atom_vars[key] = var
            self.atoms[var] = ("eq", lin)
        return var

    def _atom_bool(self, name: str) -> int:
        key = ("bool", name)
        var = self.atom_vars.get(key)
        if var is None:
            var = self.new_var()
            self.atom_vars[key] = var
            self.atoms[var] = ("bool", name)
        return var

    # ----- formulas -----

    def encode(self, form) -> int:
        self._tick()
        if form == "true":
            return TRUE_LIT
        if form == "false":
            return -TRUE_LIT
        if isinstance(form, str):
            decl = self.decls.get(form)
            if decl is None or decl.arg_sorts or decl.ret_sort != "Bool":
                raise EngineError(f"expected a boolean constant, got {form!r}")
            return self._atom_bool(form)
        if not isinstance(form, list) or not form:
            raise EngineError(f"bad formula {form!r}")
        key = _freeze(form)
        lit = self.cache.get(key)
        if lit is not None:
            return lit
        lit = self._encode_node(form)
        self.cache[key] = lit
        return lit

    def _encode_node(self, form) -> int:
        head, args = form[0], form[1:]
        if head == "and":
            return self._gate_and([self.encode(a) for a in args])
        if head == "or":
            return -self._gate_and([-self.encode(a) for a in args])
        if head == "not":
            return -self.encode(args[0])
        if head == "=>":
            lits = [self.encode(a) for a in args]
            out = lits[-1]
            for hyp in reversed(lits[:-1]):
                out = -self._gate_and([hyp, -out])
            return out
        if head == "=":
            s = sort_of_form(args[0], self.decls)
            if s == "Int":
                lins = [self.linearize(a) for a in args]
                return self._gate_and(
                    [self._atom_eq(a.sub(b)) for a, b in zip(lins, lins[1:])]
                )
            bl = [self.encode(a) for a in args]
            return self._gate_and([self._iff(a, b) for a, b in zip(bl, bl[1:])])
        if head == "distinct":
            s = sort_of_form(args[0], self.decls)
            parts = []
            if s == "Int":
                lins = [self.linearize(a) for a in args]
                for i in range(len(lins)):
                    for j in range(i + 1, len(lins)):
                        parts.append(-self._atom_eq(lins[i].sub(lins[j])))
            else:
                bl = [self.encode(a) for a in args]
                for i in range(len(bl)):
                    for j in range(i + 1, len(bl)):
                        parts.append(-self._iff(bl[i], bl[j]))
            return self._gate_and(parts)
        if head in ("<", "<=", ">", ">="):
            lins = [self.linearize(a) for a in args]
            parts = []
            for a, b in zip(lins, lins[1:]):
                if head == "<":
                    parts.append(self._atom_ge(b.sub(a).shift(-1)))
                elif head == "<=":
                    parts.append(self._atom_ge(b.sub(a)))
                elif head == ">":
                    parts.append(self._atom_ge(a.sub(b).shift(-1)))
                else:
                    parts.append(self._atom_ge(a.sub(b)))
            return self._gate_and(parts)
        if head == "ite":
            if sort_of_form(args[1], self.decls) != "Bool":
                raise EngineError("integer ite terms are not supported")
            c, t, e = (self.encode(a) for a in args)
            return self._gate_ite(c, t, e)
        decl = self.decls.get(head)
        if decl is not None and decl.arg_sorts and decl.ret_sort == "Bool":
            return self._instance(head, decl, args)
        raise EngineError(f"unsupported formula {form!r}")

    # ----- gates -----

    def _gate_and(self, lits: list[int]) -> int:
        out = []
        seen = set()
        for l in lits:
            if l == TRUE_LIT or l in seen:
                continue
            if l == -TRUE_LIT or -l in seen:
                return -TRUE_LIT
            seen.add(l)
            out.append(l)
        if not out:
            return TRUE_LIT
        if len(out) == 1:
            return out[0]
        p = self.new_var()
        for l in out:
            self.clauses.append([-p, l])
        self.clauses.append([p] + [-l for l in out])
        return p

    def _iff(self, a: int, b: int) -> int:
        if a == TRUE_LIT:
            return b
        if a == -TRUE_LIT:
            return -b
        if b == TRUE_LIT:
            return a
        if b == -TRUE_LIT:
            return -a
        if a == b:
            return TRUE_LIT
        if a == -b:
            return -TRUE_LIT
        p = self.new_var()
        self.clauses.extend([[-p, -a, b], [-p, a, -b], [p, a, b], [p, -a, -b]])
        return p

    def _gate_ite(self, c: int, t: int, e: int) -> int:
        if c == TRUE_LIT:
            return t
        if c == -TRUE_LIT:
            return e
        if t == e:
            return t
        p = self.new_var()
        self.clauses.extend([[-p, -c, t], [-p, c, e], [p, -c, -t], [p, c, -e]])
        return p

    # ----- congruence -----

    def add_congruence_clauses(self):
        for fname, insts in self.instances.items():
            for i in range(len(insts)):
                for j in range(i + 1, len(insts)):
                    self._tick()
                    args_i, inst_i = insts[i]
                    args_j, inst_j = insts[j]
                    hyp = []
                    trivial = False
                    for a, b in zip(args_i, args_j):
                        e = self._atom_eq(a.sub(b))
                        if e == -TRUE_LIT:
                            trivial = True
                            break
                        if e != TRUE_LIT:
                            hyp.append(-e)
                    if trivial:
                        continue
                    if isinstance(inst_i, str):
                        concl = self._atom_eq(Lin({inst_i: 1}).sub(Lin({inst_j: 1})))
                        self.clauses.append(hyp + [concl])
                    else:
                        self.clauses.append(hyp + [-inst_i, inst_j])
                        self.clauses.append(hyp + [inst_i, -inst_j])


class _Search:
    """DPLL over the encoded clauses, with the integer solver as theory."""

    def __init__(self, enc: _Encoder, deadline: float | None):
        self.enc = enc
        self.deadline = deadline
        self.nvars = enc.nvars
        self.clauses = [list(c) for c in enc.clauses]
        self.assign = [0] * (self.nvars + 1)  # 0 unassigned, 1 true, -1 false
        self.trail: list[int] = []
        self.decisions: list[tuple[int, bool, int]] = []  # (var, flipped, trail len)
        self.watches: dict[int, list[int]] = {}
        self.incomplete = False
        self.theory_model: dict[str, int] | None = None
        self.units: list[int] = []
        for idx, clause in enumerate(self.clauses):
            if len(clause) == 1:
                self.units.append(clause[0])
            self._watch(idx, clause)

    def _tick(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise Timeout()

    def _watch(self, idx: int, clause: list[int]):
        if len(clause) == 1:
            clause.append(clause[0])
        self.watches.setdefault(clause[0], []).append(idx)
        if clause[1] != clause[0]:
            self.watches.setdefault(clause[1], []).append(idx)
        else:
            self.watches[clause[0]].append(idx)

    def _value(self, lit: int) -> int:
        v = self.assign[abs(lit)]
        return v if lit > 0 else -v

    def _set(self, lit: int):
        self.assign[abs(lit)] = 1 if lit > 0 else -1
        self.trail.append(lit)

    def _propagate(self, queue: list[int]) -> bool:
        """Assign queued literals and their consequences; False on conflict."""
        while queue:
            self._tick()
            lit = queue.pop()
            val = self._value(lit)
            if val == 1:
                continue
            if val == -1:
                return False
            self._set(lit)
            falsified = -lit
            for idx in list(self.watches.get(falsified, ())):
                clause = self.clauses[idx]
                if clause[0] == falsified:
                    clause[0], clause[1] = clause[1], clause[0]
                if self._value(clause[0]) == 1:
                    continue
                moved = False
                for k in range(2, len(clause)):
                    if self._value(clause[k]) != -1:
                        self.watches[falsified].remove(idx)
                        clause[1], clause[k] = clause[k], clause[1]
                        self.watches.setdefault(clause[1], []).append(idx)
                        moved = True
                        break
                if moved:
                    continue
                other = clause[0]
                v = self._value(other)
                if v == -1:
                    return False
                if v == 0:
                    queue.append(other)
        return True

    def _backjump(self) -> list[int] | None:
        """Undo to the most recent unflipped decision; its flip as new queue."""
        while self.decisions:
            var, flipped, mark = self.decisions.pop()
            while len(self.trail) > mark:
                self.assign[abs(self.trail.pop())] = 0
            if not flipped:
                # decisions are always tried positive first
                self.decisions.append((var, True, mark))
                return [-var]
        return None

    def _theory_literals(self) -> list[int]:
        out = []
        for lit in self.trail:
            info = self.enc.atoms.get(abs(lit))
            if info is not None and info[0] != "bool":
                out.append(lit)
        return out

    def _theory_check(self, lits: list[int]) -> dict[str, int] | None:
        eqs, ges, neqs = [], [], []
        for lit in lits:
            kind, lin = self.enc.atoms[abs(lit)]
            if kind == "eq":
                (eqs if lit > 0 else neqs).append(lin)
            else:
                if lit > 0:
                    ges.append(lin)
                else:
                    ges.append(Lin({v: -c for v, c in lin.coeffs.items()}, -lin.const - 1))
        try:
            return lia.solve(eqs, ges, neqs, self.deadline)
        except lia.Timeout:
            raise Timeout() from None

    def _learn_conflict(self, lits: list[int]):
        core = list(lits)
        if len(core) <= 40:
            i = 0
            while i < len(core):
                trial = core[:i] + core[i + 1 :]
                if not trial:
                    break
                self._tick()
                if self._theory_check(trial) is None:
                    core = trial
                else:
                    i += 1
        clause = [-l for l in core]
        idx = len(self.clauses)
        self.clauses.append(clause)
        self._watch(idx, clause)

    def _pick_branch(self) -> int | None:
        for v in range(2, self.nvars + 1):
            if self.assign[v] == 0:
                return v
        return None

    def run(self) -> str:
        ok = self._propagate(list(self.units))
        while True:
            self._tick()
            if not ok:
                flip = self._backjump()
                if flip is None:
                    return "unsat"
                ok = self._propagate(flip)
                continue
            lits = self._theory_literals()
            model = self._theory_check(lits) if lits else {}
            if model is None:
                self._learn_conflict(lits)
                ok = False
                continue
            var = self._pick_branch()
            if var is None:
                repaired = self._repair(model, lits)
                if repaired is not None:
                    self.theory_model = repaired
                    return "sat"
                self.incomplete = True
                blocking = [-l for l in lits] or [-TRUE_LIT]
                idx = len(self.clauses)
                self.clauses.append(blocking)
                self._watch(idx, blocking)
                ok = False
                continue
            self.decisions.append((var, False, len(self.trail)))
            ok = self._propagate([var])

    def _repair(self, model: dict[str, int], lits: list[int]) -> dict[str, int] | None:
        values = dict(model)
        for name, fa, fb in self.enc.products:
            values[name] = fa.eval(values) * fb.eval(values)
        if not self.enc.products:
            return values
        for lit in lits:
            kind, lin = self.enc.atoms[abs(lit)]
            got = lin.eval(values)
            if kind == "eq":
                holds = got == 0
            else:
                holds = got >= 0
            if holds != (lit > 0):
                return None
        return values


def check(
    assertions: list,
    decls: dict[str, Declaration],
    timeout_ms: int | None = None,
    produce_models: bool = True,
) -> Result:
    deadline = None
    if timeout_ms is not None:
        deadline = time.monotonic() + timeout_ms / 1000.0
    try:
        enc = _Encoder(decls, deadline)
        roots = [enc.encode(a) for a in assertions]
        enc.add_congruence_clauses()
        for lit in roots:
            enc.clauses.append([lit])
        search = _Search(enc, deadline)
        status = search.run()
    except Timeout:
        return Result("unknown", reason="timeout")
    if status == "unsat":
        if search.incomplete:
            # some branch was abandoned because its products could not be
            # repaired, so exhausting the search does not prove unsat
            return Result("unknown", reason="incomplete")
        return Result("unsat")
    result = Result("sat")
    if produce_models:
        _build_model(result, enc, search, decls)
    return result


def _build_model(result: Result, enc: _Encoder, search: _Search, decls):
    values = search.theory_model or {}
    for name, decl in decls.items():
        if decl.arg_sorts:
            continue
        if decl.ret_sort == "Int":
            result.int_values[name] = values.get(name, 0)
        else:
            var = enc.atom_vars.get(("bool", name))
            if var is None:
                result.bool_values[name] = False
            else:
                result.bool_values[name] = search.assign[var] == 1
    for fname, insts in enc.instances.items():
        decl = decls[fname]
        entries = []
        seen = set()
        for arg_lins, inst in insts:
            args = tuple(l.eval(values) for l in arg_lins)
            if args in seen:
                continue
            seen.add(args)
            if isinstance(inst, str):
                entries.append((args, values.get(inst, 0)))
            else:
                entries.append((args, search.assign[inst] == 1))
        default = 0 if decl.ret_sort == "Int" else False
        result.fun_tables[fname] = FunTable(
            decl.arg_sorts, decl.ret_sort, entries, default
        )
