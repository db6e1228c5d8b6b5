"""Command-line front end.

Three subcommands: `check` verifies a fully annotated program, `synth`
searches for missing loop invariants, `bench` runs synth over a directory
and prints a summary table.

Exit codes: 0 verified/synthesized, 1 fail/inconclusive, 2 bad input,
3 solver failure.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .abduce import global_pool
from .ilinva import DeepeningSchedule, SynthesisStats, ilinva
from .lang import (
    TRUE,
    InvforgeError,
    Program,
    instruction_at,
    loop_locations,
    prune_symbols,
)
from .parser import ParseError, parse_program, render_expr, render_program
from .solver import SolverConfig, SolverError, SolverSession
from .vc import Vc, Verdict, VcKind, check_vc, vcgen

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3


@dataclass
class RunReport:
    """Everything one run learned, in printable form."""

    outcome: str  # verified | synthesized | fail | inconclusive
    verdicts: dict[str, str]  # VC id -> valid | invalid | unknown
    invariants: dict[str, str]  # loop location -> formula text
    candidates_tried: int
    solver_calls: int
    wall_ms: int

    def lines(self):
        yield f"outcome: {self.outcome}"
        for vc_id, verdict in self.verdicts.items():
            yield f"vc {vc_id}: {verdict}"
        for loc, formula in self.invariants.items():
            yield f"invariant {loc}: {formula}"
        yield f"candidates tried: {self.candidates_tried}"
        yield f"solver calls: {self.solver_calls}"
        yield f"wall ms: {self.wall_ms}"


def _check_all(p: Program, sess: SolverSession) -> dict[str, Verdict]:
    return {v.id: check_vc(v, sess) for v in vcgen(p).all_vcs()}


def _invariant_texts(p: Program) -> dict[str, str]:
    out = {}
    for loc in loop_locations(p):
        out[str(loc)] = render_expr(instruction_at(p, loc).invariant)
    return out


def _settled_outcome(verdicts: dict[str, Verdict]) -> str:
    if any(v is Verdict.INVALID for v in verdicts.values()):
        return "fail"
    if any(v is Verdict.UNKNOWN for v in verdicts.values()):
        return "inconclusive"
    return "verified"


def _load(path: Path) -> Program:
    try:
        source = path.read_text()
    except OSError as exc:
        raise InvforgeError(f"{path}: {exc.strerror or exc}") from exc
    return parse_program(source)


def cmd_check(path: Path, config: SolverConfig | None = None) -> RunReport:
    """Check every condition of an annotated program as-is."""
    p = _load(path)
    start = time.monotonic()
    with SolverSession(config) as sess:
        verdicts = _check_all(p, sess)
        calls = sess.stats.solver_calls
    return RunReport(
        outcome=_settled_outcome(verdicts),
        verdicts={k: v.value for k, v in verdicts.items()},
        invariants=_invariant_texts(p),
        candidates_tried=0,
        solver_calls=calls,
        wall_ms=int((time.monotonic() - start) * 1000),
    )


def solved_path(source: Path) -> Path:
    return source.with_name(source.stem + ".solved.imp")


def _write_solved(source: Path, p: Program):
    solved_path(source).write_text(render_program(prune_symbols(p)))


def cmd_synth(
    path: Path,
    config: SolverConfig | None = None,
    disjuncts: int = 1,
    max_depth: int = 2,
    max_size: int = 2,
    budget_s: float = 120.0,
    trace=None,
) -> RunReport:
    """Search for loop invariants that make every condition valid.

    Writes the annotated program next to the input (stem + ".solved.imp")
    when the outcome is verified or synthesized.
    """
    p = _load(path)
    start = time.monotonic()
    stats = SynthesisStats()
    with SolverSession(config) as vc_sess, SolverSession(config) as abd_sess:
        initial = _check_all(p, vc_sess)
        bad_seed = [
            v
            for v in vcgen(p).all_vcs()
            if v.kind is not VcKind.ASSERTION
            and initial[v.id] is Verdict.INVALID
        ]
        if bad_seed:
            names = ", ".join(v.id for v in bad_seed)
            raise InvforgeError(
                f"{path}: initial invariant annotations are not inductive ({names})"
            )
        if all(v is Verdict.VALID for v in initial.values()):
            _write_solved(path, p)
            return RunReport(
                outcome="verified",
                verdicts={k: v.value for k, v in initial.items()},
                invariants=_invariant_texts(p),
                candidates_tried=0,
                solver_calls=vc_sess.stats.solver_calls,
                wall_ms=int((time.monotonic() - start) * 1000),
            )

        schedule = DeepeningSchedule.default(
            disjuncts=disjuncts, max_depth=max_depth, max_size=max_size
        )
        result = ilinva(
            p,
            schedule,
            vc_sess,
            abduce_sess=abd_sess,
            deadline=start + budget_s,
            trace=trace,
            stats=stats,
        )
        if result is None:
            verdicts = initial
            outcome = "fail" if _settled_outcome(initial) == "fail" else "inconclusive"
            final = p
        else:
            verdicts = _check_all(result, vc_sess)
            nontrivial = any(
                instruction_at(result, loc).invariant != TRUE
                for loc in loop_locations(result)
            )
            outcome = "synthesized" if nontrivial else "verified"
            final = result
            _write_solved(path, final)
        calls = vc_sess.stats.solver_calls + abd_sess.stats.solver_calls
    return RunReport(
        outcome=outcome,
        verdicts={k: v.value for k, v in verdicts.items()},
        invariants=_invariant_texts(final),
        candidates_tried=stats.candidates_tried,
        solver_calls=calls,
        wall_ms=int((time.monotonic() - start) * 1000),
    )


def cmd_bench(
    directory: Path,
    config: SolverConfig | None = None,
    disjuncts: int = 1,
    max_depth: int = 2,
    max_size: int = 2,
    budget_s: float = 120.0,
    out=None,
) -> int:
    """Run synth on every .imp file in a directory and tabulate results."""
    if out is None:
        out = sys.stdout
    files = sorted(directory.glob("*.imp"))
    files = [f for f in files if not f.name.endswith(".solved.imp")]
    rows = [("file", "outcome", "time_s", "candidates", "abducibles")]
    for f in files:
        try:
            pool = len(global_pool(_load(f), max_depth))
            report = cmd_synth(
                f,
                config,
                disjuncts=disjuncts,
                max_depth=max_depth,
                max_size=max_size,
                budget_s=budget_s,
            )
            rows.append(
                (
                    f.name,
                    report.outcome,
                    f"{report.wall_ms / 1000.0:.2f}",
                    str(report.candidates_tried),
                    str(pool),
                )
            )
        except (InvforgeError, SolverError) as exc:
            rows.append((f.name, f"error: {exc}", "-", "-", "-"))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip(), file=out)
    return EXIT_OK


def _trace_writer(stream):
    def emit(loc, formula, verdict, calls):
        record = {
            "loop": str(loc),
            "formula": formula,
            "verdict": verdict,
            "solver_calls": calls,
        }
        print(json.dumps(record), file=stream, flush=True)

    return emit


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="invforge",
        description="Loop invariant synthesis for a small imperative language.",
    )
    ap.add_argument(
        "--solver-timeout-ms",
        type=int,
        default=1000,
        help="per-query solver timeout (default 1000)",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="verify an annotated program")
    p_check.add_argument("file", type=Path)

    p_synth = sub.add_parser("synth", help="synthesize missing loop invariants")
    p_synth.add_argument("file", type=Path)
    _add_search_flags(p_synth)
    p_synth.add_argument(
        "--trace",
        action="store_true",
        help="write one JSON line per candidate to stderr",
    )

    p_bench = sub.add_parser("bench", help="run synth over a directory of .imp files")
    p_bench.add_argument("dir", type=Path)
    _add_search_flags(p_bench)
    return ap


def _add_search_flags(sp: argparse.ArgumentParser):
    sp.add_argument("--disjuncts", type=int, choices=(1, 2), default=1)
    sp.add_argument("--max-depth", type=int, default=2)
    sp.add_argument("--max-size", type=int, default=2)
    sp.add_argument(
        "--budget-s", type=float, default=120.0, help="wall budget (default 120)"
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    config = SolverConfig(timeout_ms=args.solver_timeout_ms)
    try:
        if args.command == "check":
            report = cmd_check(args.file, config)
        elif args.command == "synth":
            trace = _trace_writer(sys.stderr) if args.trace else None
            report = cmd_synth(
                args.file,
                config,
                disjuncts=args.disjuncts,
                max_depth=args.max_depth,
                max_size=args.max_size,
                budget_s=args.budget_s,
                trace=trace,
            )
        else:
            if not args.dir.is_dir():
                print(f"invforge: not a directory: {args.dir}", file=sys.stderr)
                return EXIT_INPUT
            return cmd_bench(
                args.dir,
                config,
                disjuncts=args.disjuncts,
                max_depth=args.max_depth,
                max_size=args.max_size,
                budget_s=args.budget_s,
            )
    except SolverError as exc:
        print(f"invforge: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ParseError, InvforgeError) as exc:
        print(f"invforge: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for line in report.lines():
        print(line)
    return EXIT_OK if report.outcome in ("verified", "synthesized") else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
