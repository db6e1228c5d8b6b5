"""SMT-LIB 2 command loop on stdin/stdout.

Supports the command subset needed for program verification queries:
declarations over Int and Bool (including uninterpreted functions), assert,
push/pop, check-sat with a per-call timeout option, get-model and
get-info :reason-unknown.  Every reply is flushed immediately so the process
can sit behind a pipe.  With --no-incremental, push and pop report errors,
which exercises clients that must fall back to restarting the solver.
"""

from __future__ import annotations

import argparse
import sys

from .. import sexpr
from . import engine
from .engine import Declaration, EngineError


def _escape(msg: str) -> str:
    return str(msg).replace('"', "'")


def _render_int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


def _render_value(v, sort: str) -> str:
    if sort == "Bool":
        return "true" if v else "false"
    return _render_int(v)


class _Frame:
    def __init__(self):
        self.assertions: list = []
        self.declared: list[str] = []


class Repl:
    def __init__(self, incremental: bool = True):
        self.incremental = incremental
        self._reset_state()

    def _reset_state(self):
        self.decls: dict[str, Declaration] = {}
        self.frames: list[_Frame] = [_Frame()]
        self.print_success = False
        self.timeout_ms: int | None = None
        self.produce_models = True
        self.last_result: engine.Result | None = None

    # ----- command handling -----

    def handle(self, form) -> bool:
        """Process one command; True means exit was requested."""
        try:
            return self._dispatch(form)
        except EngineError as e:
            self._reply(f'(error "{_escape(e)}")')
            return False

    def _dispatch(self, form) -> bool:
        if not isinstance(form, list) or not form or not isinstance(form[0], str):
            raise EngineError(f"not a command: {form!r}")
        cmd = form[0]
        if cmd == "exit":
            return True
        handler = getattr(self, "_cmd_" + cmd.replace("-", "_"), None)
        if handler is None:
            raise EngineError(f"unsupported command {cmd}")
        handler(form)
        return False

    def _reply(self, text: str):
        print(text, flush=True)

    def _success(self):
        if self.print_success:
            self._reply("success")

    def _cmd_set_option(self, form):
        if len(form) != 3 or not isinstance(form[1], str):
            raise EngineError("set-option expects a keyword and a value")
        key, value = form[1], form[2]
        if key == ":print-success":
            self.print_success = value == "true"
        elif key == ":timeout":
            if not isinstance(value, int) or value < 0:
                raise EngineError(":timeout expects a non-negative integer")
            self.timeout_ms = value
        elif key == ":produce-models":
            self.produce_models = value == "true"
        # other options are accepted and ignored
        self._success()

    def _cmd_set_logic(self, form):
        self._success()

    def _cmd_set_info(self, form):
        self._success()

    def _sort(self, form) -> str:
        if form in ("Int", "Bool"):
            return form
        raise EngineError(f"unsupported sort {form!r}")

    def _declare(self, name, arg_sorts, ret_sort):
        if not isinstance(name, str):
            raise EngineError("symbol expected")
        if name in self.decls:
            raise EngineError(f"{name} is already declared")
        self.decls[name] = Declaration(name, arg_sorts, ret_sort)
        self.frames[-1].declared.append(name)

    def _cmd_declare_fun(self, form):
        if len(form) != 4 or not isinstance(form[2], list):
            raise EngineError("declare-fun expects a name, argument sorts and a sort")
        args = tuple(self._sort(s) for s in form[2])
        self._declare(form[1], args, self._sort(form[3]))
        self._success()

    def _cmd_declare_const(self, form):
        if len(form) != 3:
            raise EngineError("declare-const expects a name and a sort")
        self._declare(form[1], (), self._sort(form[2]))
        self._success()

    def _cmd_assert(self, form):
        if len(form) != 2:
            raise EngineError("assert expects one formula")
        got = engine.sort_of_form(form[1], self.decls)
        if got != "Bool":
            raise EngineError(f"asserted term has sort {got}, expected Bool")
        self.frames[-1].assertions.append(form[1])
        self._success()

    def _cmd_push(self, form):
        if not self.incremental:
            raise EngineError("incremental commands are disabled")
        n = form[1] if len(form) > 1 else 1
        if not isinstance(n, int) or n < 0:
            raise EngineError("push expects a non-negative integer")
        for _ in range(n):
            self.frames.append(_Frame())
        self._success()

    def _cmd_pop(self, form):
        if not self.incremental:
            raise EngineError("incremental commands are disabled")
        n = form[1] if len(form) > 1 else 1
        if not isinstance(n, int) or n < 0:
            raise EngineError("pop expects a non-negative integer")
        if n >= len(self.frames):
            raise EngineError("pop underflows the assertion stack")
        for _ in range(n):
            frame = self.frames.pop()
            for name in frame.declared:
                del self.decls[name]
        self._success()

    def _cmd_check_sat(self, form):
        assertions = [a for f in self.frames for a in f.assertions]
        result = engine.check(
            assertions, self.decls, self.timeout_ms, self.produce_models
        )
        self.last_result = result
        self._reply(result.status)

    def _cmd_get_model(self, form):
        r = self.last_result
        if r is None or r.status != "sat":
            raise EngineError("model is not available")
        lines = ["("]
        for name in sorted(r.int_values):
            lines.append(
                f"  (define-fun {name} () Int {_render_int(r.int_values[name])})"
            )
        for name in sorted(r.bool_values):
            value = "true" if r.bool_values[name] else "false"
            lines.append(f"  (define-fun {name} () Bool {value})")
        for fname in sorted(r.fun_tables):
            lines.append(self._fun_def(fname, r.fun_tables[fname]))
        lines.append(")")
        self._reply("\n".join(lines))

    def _fun_def(self, fname: str, table: engine.FunTable) -> str:
        params = " ".join(
            f"(x!{i} {s})" for i, s in enumerate(table.arg_sorts)
        )
        body = _render_value(table.default, table.ret_sort)
        for args, value in reversed(table.entries):
            tests = [
                f"(= x!{i} {_render_int(a)})" for i, a in enumerate(args)
            ]
            cond = tests[0] if len(tests) == 1 else "(and " + " ".join(tests) + ")"
            body = f"(ite {cond} {_render_value(value, table.ret_sort)} {body})"
        return f"  (define-fun {fname} ({params}) {table.ret_sort} {body})"

    def _cmd_get_info(self, form):
        if len(form) != 2:
            raise EngineError("get-info expects one keyword")
        key = form[1]
        if key == ":reason-unknown":
            r = self.last_result
            reason = r.reason if r is not None and r.reason else "unknown"
            self._reply(f'(:reason-unknown "{reason}")')
        elif key == ":name":
            self._reply('(:name "minismt")')
        elif key == ":version":
            self._reply('(:version "0.1")')
        else:
            raise EngineError(f"unsupported get-info key {key}")

    def _cmd_echo(self, form):
        if len(form) != 2 or not isinstance(form[1], str):
            raise EngineError("echo expects a string")
        text = form[1]
        if text.startswith('"') and text.endswith('"') and len(text) >= 2:
            text = text[1:-1].replace('""', '"')
        self._reply(text)

    def _cmd_reset(self, form):
        self._reset_state()
        self._success()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="invforge-smt",
        description="small SMT solver for integer, boolean and uninterpreted-"
        "function formulas, speaking SMT-LIB 2 on stdin/stdout",
    )
    parser.add_argument(
        "--no-incremental",
        action="store_true",
        help="report errors for push/pop instead of supporting them",
    )
    ns = parser.parse_args(argv)
    repl = Repl(incremental=not ns.no_incremental)
    reader = sexpr.Reader()
    for line in sys.stdin:
        try:
            forms = reader.feed(line)
        except sexpr.SexprError as e:
            reader = sexpr.Reader()
            print(f'(error "{_escape(e)}")', flush=True)
            continue
        for form in forms:
            if repl.handle(form):
                return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
