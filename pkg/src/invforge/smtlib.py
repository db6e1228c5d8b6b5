"""Serialization of expressions to SMT-LIB 2 text and evaluation of the
models a solver sends back."""

from __future__ import annotations

from dataclasses import dataclass

from .lang import (
    And,
    App,
    BinArith,
    BoolLit,
    Cmp,
    Expr,
    Implies,
    IntLit,
    Neg,
    Not,
    Or,
    Sort,
    Var,
)
from .sexpr import render


class CannotEvaluate(Exception):
    """The model does not determine a value for this term."""


def sort_name(sort: Sort) -> str:
    return "Int" if sort is Sort.INT else "Bool"


def declaration(name: str, arg_sorts: tuple[Sort, ...], ret: Sort) -> str:
    args = " ".join(sort_name(s) for s in arg_sorts)
    return f"(declare-fun {name} ({args}) {sort_name(ret)})"


def to_smt(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value) if e.value >= 0 else f"(- {-e.value})"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BinArith):
        return f"({e.op} {to_smt(e.lhs)} {to_smt(e.rhs)})"
    if isinstance(e, Neg):
        return f"(- {to_smt(e.arg)})"
    if isinstance(e, App):
        if not e.args:
            return e.name
        return f"({e.name} {' '.join(to_smt(a) for a in e.args)})"
    if isinstance(e, Cmp):
        return f"({e.op} {to_smt(e.lhs)} {to_smt(e.rhs)})"
    if isinstance(e, Not):
        return f"(not {to_smt(e.arg)})"
    if isinstance(e, And):
        if not e.args:
            return "true"
        if len(e.args) == 1:
            return to_smt(e.args[0])
        return f"(and {' '.join(to_smt(a) for a in e.args)})"
    if isinstance(e, Or):
        if not e.args:
            return "false"
        if len(e.args) == 1:
            return to_smt(e.args[0])
        return f"(or {' '.join(to_smt(a) for a in e.args)})"
    if isinstance(e, Implies):
        return f"(=> {to_smt(e.lhs)} {to_smt(e.rhs)})"
    raise TypeError(f"cannot serialize {e!r}")


@dataclass
class _FunDef:
    params: list[str]
    body: object


class Model:
    """Values extracted from a get-model response."""

    def __init__(self):
        self.values: dict[str, int | bool] = {}
        self.funs: dict[str, _FunDef] = {}

    @classmethod
    def parse(cls, form) -> "Model":
        model = cls()
        if not isinstance(form, list):
            raise CannotEvaluate(f"malformed model {form!r}")
        entries = form[1:] if form and form[0] == "model" else form
        defs = []
        for entry in entries:
            if (
                isinstance(entry, list)
                and len(entry) >= 5
                and entry[0] == "define-fun"
            ):
                defs.append(entry)
        # constants first so function bodies may reference them
        for entry in defs:
            _, name, params, _sort, body = entry[0], entry[1], entry[2], entry[3], entry[4]
            if params:
                model.funs[name] = _FunDef([p[0] for p in params], body)
        for entry in defs:
            name, params, body = entry[1], entry[2], entry[4]
            if not params:
                model.values[name] = model._eval_form(body, {})
        return model

    def apply(self, fname: str, args: list) -> int | bool:
        fd = self.funs.get(fname)
        if fd is None:
            raise CannotEvaluate(fname)
        if len(fd.params) != len(args):
            raise CannotEvaluate(fname)
        return self._eval_form(fd.body, dict(zip(fd.params, args)))

    def _eval_form(self, form, env: dict):
        if isinstance(form, int):
            return form
        if form == "true":
            return True
        if form == "false":
            return False
        if isinstance(form, str):
            if form in env:
                return env[form]
            if form in self.values:
                return self.values[form]
            raise CannotEvaluate(form)
        if isinstance(form, list) and form and isinstance(form[0], str):
            head, args = form[0], form[1:]
            if head == "-" and len(args) == 1:
                return -self._eval_form(args[0], env)
            if head in ("+", "-", "*") and args:
                vals = [self._eval_form(a, env) for a in args]
                out = vals[0]
                for v in vals[1:]:
                    out = out + v if head == "+" else out - v if head == "-" else out * v
                return out
            if head == "ite" and len(args) == 3:
                c = self._eval_form(args[0], env)
                return self._eval_form(args[1] if c else args[2], env)
            if head == "=" and len(args) >= 2:
                vals = [self._eval_form(a, env) for a in args]
                return all(a == b for a, b in zip(vals, vals[1:]))
            if head in ("<", "<=", ">", ">=") and len(args) >= 2:
                vals = [self._eval_form(a, env) for a in args]
                for a, b in zip(vals, vals[1:]):
                    ok = (
                        a < b
                        if head == "<"
                        else a <= b
                        if head == "<="
                        else a > b
                        if head == ">"
                        else a >= b
                    )
                    if not ok:
                        return False
                return True
            if head == "and":
                return all(self._eval_form(a, env) for a in args)
            if head == "or":
                return any(self._eval_form(a, env) for a in args)
            if head == "not" and len(args) == 1:
                return not self._eval_form(args[0], env)
            if head == "=>" and len(args) >= 2:
                for a in args[:-1]:
                    if not self._eval_form(a, env):
                        return True
                return self._eval_form(args[-1], env)
            if head in self.funs:
                return self.apply(head, [self._eval_form(a, env) for a in args])
        raise CannotEvaluate(render(form))


def evaluate(e: Expr, model: Model) -> int | bool:
    """Value of an expression under a model.

    Conjunction and disjunction are tolerant: a decided operand short-circuits
    even when a sibling has no value in the model.
    """
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Var):
        if e.name in model.values:
            return model.values[e.name]
        raise CannotEvaluate(e.name)
    if isinstance(e, BinArith):
        a, b = evaluate(e.lhs, model), evaluate(e.rhs, model)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        return a * b
    if isinstance(e, Neg):
        return -evaluate(e.arg, model)
    if isinstance(e, App):
        return model.apply(e.name, [evaluate(a, model) for a in e.args])
    if isinstance(e, Cmp):
        a, b = evaluate(e.lhs, model), evaluate(e.rhs, model)
        if e.op == "=":
            return a == b
        if e.op == "<":
            return a < b
        if e.op == "<=":
            return a <= b
        if e.op == ">":
            return a > b
        return a >= b
    if isinstance(e, Not):
        return not evaluate(e.arg, model)
    if isinstance(e, And):
        saw_gap = False
        for a in e.args:
            try:
                if not evaluate(a, model):
                    return False
            except CannotEvaluate:
                saw_gap = True
        if saw_gap:
            raise CannotEvaluate(to_smt(e))
        return True
    if isinstance(e, Or):
        saw_gap = False
        for a in e.args:
            try:
                if evaluate(a, model):
                    return True
            except CannotEvaluate:
                saw_gap = True
        if saw_gap:
            raise CannotEvaluate(to_smt(e))
        return False
    if isinstance(e, Implies):
        try:
            if not evaluate(e.lhs, model):
                return True
        except CannotEvaluate:
            if evaluate(e.rhs, model):
                return True
            raise
        return evaluate(e.rhs, model)
    raise TypeError(f"cannot evaluate {e!r}")
