"""Client for an external SMT solver process speaking SMT-LIB 2 on stdio.

The solver command comes from the INVFORGE_SOLVER environment variable (a
shell-style command line); by default the bundled solver is run with the
current interpreter.  One session owns one solver process.  Commands are
strictly request-response, framed by :print-success.  Sessions are
incremental when the solver accepts push/pop; otherwise every query restarts
the process and replays the asserted state, so both kinds of solver look the
same to callers.

A query that produces no response within the solver timeout plus a grace
period is abandoned: the process is killed, a fresh one is spawned with the
session state replayed, and the query reports unknown.  Protocol errors and
crashes poison the session instead, since the solver state can no longer be
trusted.
"""

from __future__ import annotations

import os
import select
import shlex
import subprocess
import sys
import time
from dataclasses import dataclass, field
from enum import Enum

from .lang import Expr, InvforgeError, Sort, free_variables, functions_used, neg
from .sexpr import Reader
from .smtlib import Model, declaration, to_smt

GRACE_SECONDS = 10.0


class SolverError(InvforgeError):
    pass


def default_command() -> list[str]:
    raw = os.environ.get("INVFORGE_SOLVER")
    if raw:
        argv = shlex.split(raw)
        if not argv:
            raise SolverError("INVFORGE_SOLVER is empty")
        return argv
    return [sys.executable, "-m", "invforge.minismt"]


@dataclass
class SolverConfig:
    command: list[str] = field(default_factory=default_command)
    logic: str = "ALL"
    timeout_ms: int = 1000
    produce_models: bool = True


class Status(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass
class SatResult:
    status: Status
    model: Model | None = None
    reason: str | None = None


class Entail(Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass
class EntailResult:
    status: Entail
    countermodel: Model | None = None


@dataclass
class SessionStats:
    solver_calls: int = 0
    cache_hits: int = 0


class _Frame:
    def __init__(self):
        self.commands: list[str] = []
        self.declared: list[str] = []


class SolverSession:
    def __init__(self, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        self.stats = SessionStats()
        self._frames: list[_Frame] = [_Frame()]
        self._declared: dict[str, tuple] = {}
        self._cache: dict[tuple, SatResult] = {}
        self._poisoned = False
        self._proc: subprocess.Popen | None = None
        self._reader = Reader()
        self._pending: list = []
        self._spawn()
        self.incremental = self._probe_incremental()

    # ----- process management -----

    def _spawn(self):
        try:
            self._proc = subprocess.Popen(
                self.config.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                bufsize=0,
            )
        except OSError as e:
            raise SolverError(f"cannot start solver {self.config.command}: {e}") from e
        self._reader = Reader()
        self._pending = []
        self._handshake()

    def _handshake(self):
        self._command("(set-option :print-success true)")
        self._command(f"(set-logic {self.config.logic})", allow_error=True)
        models = "true" if self.config.produce_models else "false"
        self._command(f"(set-option :produce-models {models})", allow_error=True)
        self._command(
            f"(set-option :timeout {self.config.timeout_ms})", allow_error=True
        )

    def _probe_incremental(self) -> bool:
        try:
            self._command("(push 1)")
            self._command("(pop 1)")
            return True
        except SolverError:
            self._poisoned = False
            return False

    def _kill(self):
        if self._proc is None:
            return
        try:
            self._proc.kill()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=5)
        except Exception:
            pass
        self._proc = None

    def _respawn(self):
        """Fresh process with the logical session state replayed."""
        self._kill()
        self._spawn()
        for depth, frame in enumerate(self._frames):
            if depth > 0 and self.incremental:
                self._command("(push 1)")
            for cmd in frame.commands:
                self._command(cmd)

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.write(b"(exit)\n")
                self._proc.stdin.flush()
            except OSError:
                pass
            self._kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # ----- wire protocol -----

    def _write(self, text: str):
        try:
            self._proc.stdin.write(text.encode() + b"\n")
            self._proc.stdin.flush()
        except OSError as e:
            self._poisoned = True
            raise SolverError(f"solver pipe closed: {e}") from e

    def _read_form(self, deadline: float):
        while not self._pending:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError()
            fd = self._proc.stdout.fileno()
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                self._poisoned = True
                raise SolverError("solver process exited unexpectedly")
            try:
                self._pending.extend(self._reader.feed(chunk.decode()))
            except Exception as e:
                self._poisoned = True
                raise SolverError(f"unreadable solver output: {e}") from e
        return self._pending.pop(0)

    def _command(self, cmd: str, allow_error: bool = False):
        """Send one command and consume its :print-success response."""
        self._check_usable()
        self._write(cmd)
        deadline = time.monotonic() + GRACE_SECONDS
        try:
            form = self._read_form(deadline)
        except TimeoutError:
            self._poisoned = True
            raise SolverError(f"no response to {cmd}") from None
        if form == "success":
            return
        if _is_error(form):
            if allow_error:
                return
            self._poisoned = True
            raise SolverError(f"solver rejected {cmd}: {_error_text(form)}")
        self._poisoned = True
        raise SolverError(f"unexpected response to {cmd}: {form!r}")

    def _check_usable(self):
        if self._poisoned:
            raise SolverError("session is poisoned by an earlier failure")
        if self._proc is None or self._proc.poll() is not None:
            self._poisoned = True
            raise SolverError("solver process is gone")

    # ----- declarations and assertions -----

    @property
    def stack_depth(self) -> int:
        return len(self._frames) - 1

    def _declare(self, name: str, arg_sorts: tuple[Sort, ...], ret: Sort):
        sig = (arg_sorts, ret)
        known = self._declared.get(name)
        if known is not None:
            if known != sig:
                raise SolverError(f"{name} used with two different signatures")
            return
        cmd = declaration(name, arg_sorts, ret)
        self._declared[name] = sig
        frame = self._frames[-1]
        frame.commands.append(cmd)
        frame.declared.append(name)
        if self.incremental:
            self._command(cmd)

    def ensure_declared(self, exprs) -> None:
        for e in exprs:
            for name, sort in sorted(free_variables(e).items()):
                self._declare(name, (), sort)
            for name, (arg_sorts, ret) in sorted(functions_used(e).items()):
                self._declare(name, arg_sorts, ret)

    def assert_expr(self, e: Expr):
        self.ensure_declared([e])
        cmd = f"(assert {to_smt(e)})"
        self._frames[-1].commands.append(cmd)
        if self.incremental:
            self._command(cmd)

    def push(self):
        self._frames.append(_Frame())
        if self.incremental:
            self._command("(push 1)")

    def pop(self):
        if len(self._frames) == 1:
            raise SolverError("pop without matching push")
        frame = self._frames.pop()
        for name in frame.declared:
            del self._declared[name]
        if self.incremental:
            self._command("(pop 1)")

    # ----- queries -----

    def check_sat(self, assumptions=(), want_model: bool | None = None) -> SatResult:
        """Satisfiability of the asserted state plus the given assumptions."""
        if want_model is None:
            want_model = self.config.produce_models
        assumptions = list(assumptions)
        self.ensure_declared(assumptions)
        texts = tuple(f"(assert {to_smt(a)})" for a in assumptions)
        key = (
            tuple(cmd for f in self._frames for cmd in f.commands),
            texts,
            want_model,
        )
        hit = self._cache.get(key)
        if hit is not None:
            self.stats.cache_hits += 1
            return hit
        self.stats.solver_calls += 1
        if self.incremental:
            result = self._check_incremental(texts, want_model)
        else:
            result = self._check_restarting(texts, want_model)
        self._cache[key] = result
        return result

    def _check_incremental(self, assumption_texts, want_model) -> SatResult:
        self._command("(push 1)")
        for text in assumption_texts:
            self._command(text)
        return self._run_check(want_model, pop_after=True)

    def _check_restarting(self, assumption_texts, want_model) -> SatResult:
        # replay everything into a fresh process for each query
        self._kill()
        self._spawn()
        for frame in self._frames:
            for cmd in frame.commands:
                self._command(cmd)
        for text in assumption_texts:
            self._command(text)
        return self._run_check(want_model, pop_after=False)

    def _run_check(self, want_model: bool, pop_after: bool) -> SatResult:
        self._check_usable()
        self._write("(check-sat)")
        deadline = (
            time.monotonic() + self.config.timeout_ms / 1000.0 + GRACE_SECONDS
        )
        try:
            form = self._read_form(deadline)
        except TimeoutError:
            # the solver ignored its own timeout; replace it and move on
            self._kill()
            self._respawn()
            return SatResult(Status.UNKNOWN, reason="timeout")
        if form == "sat":
            model = None
            if want_model:
                model = self._get_model(deadline)
            result = SatResult(Status.SAT, model=model)
        elif form == "unsat":
            result = SatResult(Status.UNSAT)
        elif form == "unknown":
            result = SatResult(Status.UNKNOWN, reason=self._reason(deadline))
        elif _is_error(form):
            self._poisoned = True
            raise SolverError(f"check-sat failed: {_error_text(form)}")
        else:
            self._poisoned = True
            raise SolverError(f"unexpected check-sat response: {form!r}")
        if pop_after:
            self._command("(pop 1)")
        return result

    def _get_model(self, deadline: float) -> Model | None:
        self._write("(get-model)")
        try:
            form = self._read_form(deadline)
        except TimeoutError:
            self._poisoned = True
            raise SolverError("no response to get-model") from None
        if _is_error(form):
            return None
        try:
            return Model.parse(form)
        except Exception:
            return None

    def _reason(self, deadline: float) -> str | None:
        self._write("(get-info :reason-unknown)")
        try:
            form = self._read_form(deadline)
        except TimeoutError:
            self._poisoned = True
            raise SolverError("no response to get-info") from None
        if (
            isinstance(form, list)
            and len(form) == 2
            and form[0] == ":reason-unknown"
        ):
            text = form[1]
            if isinstance(text, str):
                return text.strip('"')
        return None

    def entails(self, hypotheses, goal: Expr) -> EntailResult:
        """Does the conjunction of hypotheses (plus the asserted state) force goal?"""
        result = self.check_sat(
            assumptions=[*hypotheses, neg(goal)], want_model=True
        )
        if result.status is Status.UNSAT:
            return EntailResult(Entail.YES)
        if result.status is Status.SAT:
            return EntailResult(Entail.NO, countermodel=result.model)
        return EntailResult(Entail.UNKNOWN)


def _is_error(form) -> bool:
    return isinstance(form, list) and len(form) >= 1 and form[0] == "error"


def _error_text(form) -> str:
    if len(form) >= 2 and isinstance(form[1], str):
        return form[1].strip('"')
    return "unknown error"
