"""Command-line front end: problem files, synthesis runs, benchmark harness.

Three subcommands on one problem-file grammar:

* ``synth`` — generate the coefficient system for a problem file, with
  optional SMT-LIB emission, solving, finiteness classification, and
  verification of the instantiated loop.
* ``check`` — read a fully concrete loop and run the verification oracles
  against its stated invariants.
* ``bench`` — run every ``*.loop`` file in a directory under per-stage
  timeouts in isolated child processes and print a results table plus
  line-delimited machine-readable records.

Problem files are line-oriented UTF-8 text; ``#`` starts a comment:

    vars: x1 x2 x3
    mode: general            # or universal / universal-linear
    guard: none              # or a polynomial, or  template: h1; h2
    initial: 1 1 -1          # or none
    invariants:
        x2^2 - x1
    branch:                  # repeatable; one update line per variable
        x1 <- { x1^3, x2^2 }
        x2 <- { x1, x2^2 }
        x3 <- { x1 }

``check`` files use the same grammar with every generator set a singleton:
the one polynomial is the variable's concrete update.
"""

from __future__ import annotations

import argparse
import multiprocessing
import os
import queue as queue_mod
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .invariant import DEFAULT_MAX_ROUNDS, RoundCapExceeded
from .ring import PROGRAM, PolyMap, Polynomial, RingError, VarContext, parse_poly
from .solve import (
    DEFAULT_TIMEOUT_SECONDS,
    SmtJob,
    SolveError,
    SolveOutcome,
    classify_finiteness,
    emit_smtlib,
    run_smt,
)
from .synth import (
    ConcreteLoop,
    Guard,
    LoopTemplate,
    SynthError,
    SynthesisProblem,
    generate_loops,
    instantiate_loop,
)
from .universal import (
    AffineSpace,
    compute_loops_linear_universal,
    compute_loops_universal,
)
from .verify import simulate_loop, verify_invariants, verify_universal

MODES = ("general", "universal", "universal-linear")


class CliError(Exception):
    """Problem-file or usage error; message carries file and line."""


# ---------------------------------------------------------------------------
# Problem files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemFile:
    """A parsed problem file: the synthesis problem plus its run mode."""

    path: str
    mode: str
    problem: SynthesisProblem

    @property
    def name(self) -> str:
        return Path(self.path).stem


def _parse_update_line(line: str, lineno: int, path: str, ctx: VarContext):
    lhs, _, rhs = line.partition("<-")
    var = lhs.strip()
    if var not in ctx.names:
        raise CliError(f"{path}:{lineno}: '{var}' is not a declared variable")
    rhs = rhs.strip()
    if not (rhs.startswith("{") and rhs.endswith("}")):
        raise CliError(f"{path}:{lineno}: update must be 'x <- {{ p1, p2, ... }}'")
    body = rhs[1:-1].strip()
    if not body:
        raise CliError(f"{path}:{lineno}: empty generator set for '{var}'")
    gens = []
    for part in body.split(","):
        try:
            gens.append(parse_poly(part.strip(), ctx))
        except RingError as exc:
            raise CliError(f"{path}:{lineno}: {exc}") from exc
    return var, tuple(gens)


def parse_problem(path: str | Path) -> ProblemFile:
    """Parse a problem file; errors carry ``path:line``."""
    path = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc

    var_names: tuple[str, ...] | None = None
    mode = "general"
    guard_spec: tuple[int, str] | None = None
    initial_spec: tuple[int, str] | None = None
    invariant_lines: list[tuple[int, str]] = []
    branches: list[dict[str, tuple[Polynomial, ...]]] = []
    branch_linenos: list[int] = []
    section: str | None = None
    ctx: VarContext | None = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("vars:"):
            if var_names is not None:
                raise CliError(f"{path}:{lineno}: duplicate vars section")
            var_names = tuple(stripped[len("vars:"):].split())
            if not var_names:
                raise CliError(f"{path}:{lineno}: vars section names no variables")
            ctx = VarContext.make(var_names, PROGRAM)
            section = None
        elif stripped.startswith("mode:"):
            mode = stripped[len("mode:"):].strip()
            if mode not in MODES:
                raise CliError(
                    f"{path}:{lineno}: mode must be one of {', '.join(MODES)}"
                )
            section = None
        elif stripped.startswith("guard:"):
            guard_spec = (lineno, stripped[len("guard:"):].strip())
            section = None
        elif stripped.startswith("initial:"):
            initial_spec = (lineno, stripped[len("initial:"):].strip())
            section = None
        elif stripped == "invariants:":
            section = "invariants"
        elif stripped == "branch:":
            if ctx is None:
                raise CliError(f"{path}:{lineno}: branch section before vars")
            branches.append({})
            branch_linenos.append(lineno)
            section = "branch"
        elif section == "branch" and "<-" in stripped:
            var, gens = _parse_update_line(stripped, lineno, path, ctx)
            if var in branches[-1]:
                raise CliError(
                    f"{path}:{lineno}: duplicate update for '{var}' in this branch"
                )
            branches[-1][var] = gens
        elif section == "invariants":
            invariant_lines.append((lineno, stripped))
        else:
            raise CliError(f"{path}:{lineno}: unrecognized line {stripped!r}")

    if var_names is None or ctx is None:
        raise CliError(f"{path}: missing vars section")
    if not invariant_lines:
        raise CliError(f"{path}: missing invariants section")
    if not branches:
        raise CliError(f"{path}: missing branch section")
    for lineno, branch in zip(branch_linenos, branches):
        missing = [v for v in var_names if v not in branch]
        if missing:
            raise CliError(
                f"{path}:{lineno}: branch lacks updates for {', '.join(missing)}"
            )

    invariants = []
    for lineno, text_line in invariant_lines:
        try:
            invariants.append(parse_poly(text_line, ctx))
        except RingError as exc:
            raise CliError(f"{path}:{lineno}: {exc}") from exc

    if guard_spec is None or guard_spec[1] == "none":
        guard = Guard.none()
    else:
        lineno, spec = guard_spec
        try:
            if spec.startswith("template:"):
                parts = [
                    parse_poly(p.strip(), ctx)
                    for p in spec[len("template:"):].split(";")
                    if p.strip()
                ]
                if not parts:
                    raise CliError(f"{path}:{lineno}: empty guard template")
                guard = Guard.template(*parts)
            else:
                guard = Guard.concrete(parse_poly(spec, ctx))
        except RingError as exc:
            raise CliError(f"{path}:{lineno}: {exc}") from exc

    initial = None
    if initial_spec is not None and initial_spec[1] != "none":
        lineno, spec = initial_spec
        try:
            initial = tuple(Fraction(tok) for tok in spec.split())
        except (ValueError, ZeroDivisionError) as exc:
            raise CliError(f"{path}:{lineno}: bad rational in initial: {exc}") from exc
        if len(initial) != len(var_names):
            raise CliError(
                f"{path}:{lineno}: initial has {len(initial)} values "
                f"for {len(var_names)} variables"
            )

    template = LoopTemplate.make(
        ctx, [[branch[v] for v in var_names] for branch in branches]
    )
    try:
        problem = SynthesisProblem(
            template=template, invariants=tuple(invariants), guard=guard, initial=initial
        )
    except SynthError as exc:
        raise CliError(f"{path}: {exc}") from exc
    return ProblemFile(path=path, mode=mode, problem=problem)


def concrete_loop(pf: ProblemFile) -> ConcreteLoop:
    """Read the problem file's template as a literal loop (for ``check``).

    Every generator set must be a singleton; the one polynomial is the
    update itself (coefficient 1), so no unknowns remain.
    """
    problem = pf.problem
    tmpl = problem.template
    maps = []
    for i, branch in enumerate(tmpl.branches):
        updates = []
        for j, gens in enumerate(branch):
            if len(gens) != 1:
                raise CliError(
                    f"{pf.path}: branch {i + 1} gives {len(gens)} generators for "
                    f"'{tmpl.ctx.names[j]}'; a concrete loop needs exactly one"
                )
            updates.append(gens[0])
        maps.append(PolyMap.from_program_updates(tmpl.ctx, updates))
    if problem.guard.kind == "template":
        raise CliError(f"{pf.path}: a concrete loop cannot have a template guard")
    return ConcreteLoop(
        tmpl.ctx,
        problem.initial,
        problem.guard.concrete_poly(tmpl.ctx),
        tuple(maps),
    )


# ---------------------------------------------------------------------------
# Shared pipeline pieces
# ---------------------------------------------------------------------------


def _flat_unknown_names(template: LoopTemplate) -> tuple[str, ...]:
    return tuple(
        n for branch in template.coefficient_names() for row in branch for n in row
    )


def _affine_sample(space: AffineSpace) -> tuple[Fraction, ...] | None:
    """A deterministic nonzero point of the space, or None if infeasible."""
    if space.is_infeasible:
        return None
    point = list(space.particular)
    if not any(point) and space.basis:
        point = [a + b for a, b in zip(point, space.basis[0])]
    return tuple(point)


def _is_identity_loop(loop: ConcreteLoop) -> bool:
    n = len(loop.ctx)
    return all(
        f.program_components[j] == Polynomial.variable(loop.ctx, j)
        for f in loop.maps
        for j in range(n)
    )


def _verify_loop(pf: ProblemFile, loop: ConcreteLoop, seed: int):
    """Run the applicable oracles; returns (list of (label, report), verdict)."""
    gs = list(pf.problem.invariants)
    reports = []
    if pf.mode in ("universal", "universal-linear"):
        reports.append(("universal identity", verify_universal(loop, gs)))
    if loop.initial is not None:
        reports.append(("invariant-set membership", verify_invariants(loop, gs)))
        reports.append(("simulation", simulate_loop(loop, gs, seed=seed)))
    if not reports:
        reports.append(("universal identity", verify_universal(loop, gs)))
    verdict = all(rep.passed for _, rep in reports)
    return reports, verdict


def _witness_text(rep) -> str:
    w = rep.witness
    if w is None:
        return ""
    state = "(" + ", ".join(str(c) for c in w.state) + ")" if w.state else "-"
    return (
        f"  witness: word={list(w.word)} step={w.step} state={state} "
        f"invariant #{w.invariant_index + 1} -> {w.value}"
    )


def _generate(pf: ProblemFile, max_rounds: int):
    """Dispatch generation by mode: a PolynomialSystem or an AffineSpace."""
    if pf.mode == "general":
        return generate_loops(pf.problem, max_rounds=max_rounds)
    if pf.mode == "universal":
        return compute_loops_universal(list(pf.problem.invariants), pf.problem.template)
    return compute_loops_linear_universal(
        list(pf.problem.invariants), pf.problem.template
    )


def _print_system(system) -> None:
    print(f"unknowns ({len(system.unknowns)}): {' '.join(system.unknowns)}")
    print(f"equations ({len(system.equations)}):")
    for eq in system.equations:
        print(f"  {eq} = 0")


def _print_space(space: AffineSpace, names: Sequence[str]) -> None:
    if space.is_infeasible:
        print("affine space: infeasible (no loop of this shape exists)")
        return
    print(f"affine space: dim {space.dim} in ambient dim {space.ambient_dim}")
    print(f"unknowns: {' '.join(names)}")
    print(f"particular: ({', '.join(str(c) for c in space.particular)})")
    print("basis:")
    for vec in space.basis:
        print(f"  ({', '.join(str(c) for c in vec)})")


def _print_loop(loop: ConcreteLoop) -> None:
    names = loop.ctx.names
    for i in range(loop.branch_count):
        ups = "; ".join(
            f"{v}' = {u}" for v, u in zip(names, loop.updates(i))
        )
        print(f"  branch {i + 1}: {ups}")
    print(f"  guard: {loop.guard} != 0")
    if loop.initial is not None:
        print(f"  initial: ({', '.join(str(c) for c in loop.initial)})")


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    pf = parse_problem(args.path)
    t0 = time.monotonic()
    generated = _generate(pf, args.max_rounds)
    gen_time = time.monotonic() - t0
    print(f"problem: {pf.path}")
    print(f"mode: {pf.mode}")
    print(f"generation: {gen_time:.2f}s")

    if isinstance(generated, AffineSpace):
        names = _flat_unknown_names(pf.problem.template)
        _print_space(generated, names)
        if not args.solve:
            return 0
        sample = _affine_sample(generated)
        if sample is None or not any(sample):
            print("solve: no nonzero coefficient vector exists")
            return 1
        print(f"sample: ({', '.join(str(c) for c in sample)})")
        loop = instantiate_loop(pf.problem, dict(zip(names, sample)))
        print("loop:")
        _print_loop(loop)
        reports, verdict = _verify_loop(pf, loop, args.seed)
        for label, rep in reports:
            print(f"{label}: {'pass' if rep.passed else 'fail'}")
            if not rep.passed:
                print(_witness_text(rep))
        print(f"result: {'verified loop' if verdict else 'VERIFICATION FAILED'}")
        return 0 if verdict else 2

    system = generated
    _print_system(system)

    if args.finiteness:
        fin = classify_finiteness(system)
        label = {"finite": f"finite ({fin.count} solutions)", "infinite": "infinite",
                 "empty": "empty"}[fin.status]
        print(f"finiteness: {label}")

    job = SmtJob(
        system,
        number_sort=args.sort,
        nonzero_policy=args.nonzero,
        timeout_seconds=args.timeout,
    )
    if args.emit_smt:
        Path(args.emit_smt).write_text(emit_smtlib(job), encoding="utf-8")
        print(f"smt: wrote {args.emit_smt}")
    if not args.solve:
        return 0

    outcome = run_smt(job, args.solver_cmd)
    print(f"solve: {outcome.status} ({outcome.wall_time:.2f}s)")
    if outcome.status != "sat":
        return 1
    for name in system.unknowns:
        print(f"  {name} = {outcome.model[name]}")
    loop = instantiate_loop(pf.problem, outcome.model)
    print("loop:")
    _print_loop(loop)
    reports, verdict = _verify_loop(pf, loop, args.seed)
    for label, rep in reports:
        print(f"{label}: {'pass' if rep.passed else 'fail'}")
        if not rep.passed:
            print(_witness_text(rep))
    print(f"result: {'verified loop' if verdict else 'VERIFICATION FAILED'}")
    return 0 if verdict else 2


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    pf = parse_problem(args.path)
    loop = concrete_loop(pf)
    print(f"loop: {pf.path}")
    _print_loop(loop)
    gs = list(pf.problem.invariants)

    reports = [("universal identity", verify_universal(loop, gs))]
    if loop.initial is not None:
        reports.append(
            ("invariant-set membership",
             verify_invariants(loop, gs, max_rounds=args.max_rounds))
        )
        reports.append(("simulation", simulate_loop(loop, gs, seed=args.seed)))
        # universal identity is sufficient but not necessary from a fixed
        # start state; the verdict rests on the state-dependent oracles
        verdict = all(rep.passed for _, rep in reports[1:])
    else:
        verdict = reports[0][1].passed

    for label, rep in reports:
        print(f"{label}: {'pass' if rep.passed else 'fail'}")
        if not rep.passed:
            print(_witness_text(rep))
    print(f"check: {'pass' if verdict else 'fail'}")
    return 0 if verdict else 1


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

_STAGES = ("gen", "solve", "finite")


def _bench_child(path: str, args_dict: dict, q) -> None:
    """Run one problem's pipeline, reporting each stage through the queue.

    Stage order is generation -> solve+verify -> finiteness, so a slow
    finiteness classification can never cost a row its solver verdict;
    the parent kills this process when a stage overruns its budget.
    """
    try:
        pf = parse_problem(path)
        tmpl = pf.problem.template
        meta = {
            "n": len(tmpl.ctx),
            "m": len(pf.problem.invariants),
            "d": max(g.total_degree() for g in pf.problem.invariants),
            "D": tmpl.max_generator_degree(),
            "l": tmpl.generator_count(),
        }
        t0 = time.monotonic()
        generated = _generate(pf, args_dict["max_rounds"])
        q.put(("gen", time.monotonic() - t0, meta))

        if isinstance(generated, AffineSpace):
            names = _flat_unknown_names(tmpl)
            t0 = time.monotonic()
            sample = _affine_sample(generated)
            if sample is None or not any(sample):
                q.put(("solve", time.monotonic() - t0, "unsat", "-"))
            else:
                loop = instantiate_loop(pf.problem, dict(zip(names, sample)))
                _, verdict = _verify_loop(pf, loop, args_dict["seed"])
                status = "Id" if _is_identity_loop(loop) else "sat"
                q.put(("solve", time.monotonic() - t0,
                       status, "pass" if verdict else "fail"))
            if generated.is_infeasible:
                q.put(("finite", "empty"))
            else:
                q.put(("finite", "<inf" if generated.dim == 0 else "inf"))
            q.put(("done",))
            return

        system = generated
        job = SmtJob(
            system,
            number_sort=args_dict["sort"],
            nonzero_policy=args_dict["nonzero"],
            timeout_seconds=args_dict["timeout"],
        )
        outcome = run_smt(job, args_dict["solver_cmd"])
        status = {"timeout": "TL"}.get(outcome.status, outcome.status)
        verified = "-"
        if outcome.is_sat():
            loop = instantiate_loop(pf.problem, outcome.model)
            _, verdict = _verify_loop(pf, loop, args_dict["seed"])
            verified = "pass" if verdict else "fail"
            if _is_identity_loop(loop):
                status = "Id"
        q.put(("solve", outcome.wall_time, status, verified))

        fin = classify_finiteness(system)
        q.put(("finite", {"finite": "<inf", "infinite": "inf", "empty": "empty"}[fin.status]))
        q.put(("done",))
    except (CliError, RingError, SolveError, RoundCapExceeded) as exc:
        q.put(("error", str(exc)))


def _bench_row(path: str, args) -> dict:
    """Run one problem in a child process under per-stage timeouts."""
    args_dict = {
        "max_rounds": args.max_rounds,
        "sort": args.sort,
        "nonzero": args.nonzero,
        "timeout": args.timeout,
        "solver_cmd": args.solver_cmd,
        "seed": args.seed,
    }
    row = {
        "name": Path(path).stem, "n": "-", "m": "-", "d": "-", "D": "-", "l": "-",
        "gen": "-", "solve": "-", "status": "-", "finite": "-", "verified": "-",
    }
    ctx = multiprocessing.get_context("fork")
    q = ctx.Queue()
    proc = ctx.Process(target=_bench_child, args=(path, args_dict, q), daemon=True)
    proc.start()
    # Stage budgets: the solve stage gets slack beyond the solver's own
    # timeout for instantiation + verification of the model.
    budgets = {"gen": args.timeout, "solve": args.timeout + 60, "finite": args.timeout}
    stage_i = 0
    try:
        while stage_i < len(_STAGES):
            expected = _STAGES[stage_i]
            try:
                msg = q.get(timeout=budgets[expected])
            except queue_mod.Empty:
                if expected == "gen":
                    row["gen"] = "TL"
                    row["status"] = "NI"  # generation timed out: solver got no input
                elif expected == "solve":
                    row["status"] = "TL"
                else:
                    row["finite"] = "TL"
                return row
            tag = msg[0]
            if tag == "error":
                row["status"] = "error"
                row["error"] = msg[1]
                return row
            if tag == "done":
                return row
            if tag == "gen":
                _, dt, meta = msg
                row["gen"] = f"{dt:.2f}"
                row.update({k: str(v) for k, v in meta.items()})
                stage_i = 1
            elif tag == "solve":
                _, dt, status, verified = msg
                row["solve"] = f"{dt:.2f}"
                row["status"] = status
                row["verified"] = verified
                stage_i = 2
            elif tag == "finite":
                row["finite"] = msg[1]
                stage_i = 3
        # wait for the terminal marker so the child exits cleanly
        try:
            q.get(timeout=5)
        except queue_mod.Empty:
            pass
        return row
    finally:
        if proc.is_alive():
            proc.terminate()
        proc.join(5)


_COLUMNS = ("name", "n", "m", "d", "D", "l", "gen", "solve", "status", "finite", "verified")


def cmd_bench(args) -> int:
    corpus = Path(args.path)
    if not corpus.is_dir():
        raise CliError(f"benchmark corpus {corpus} is not a directory")
    paths = sorted(str(p) for p in corpus.glob("*.loop"))
    jobs = args.jobs or os.cpu_count() or 1

    rows = []
    if jobs <= 1 or len(paths) <= 1:
        for p in paths:
            rows.append(_bench_row(p, args))
    else:
        # each row already isolates its problem in a child process; the
        # pool here only overlaps independent rows
        import concurrent.futures

        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda p: _bench_row(p, args), paths))
    rows.sort(key=lambda r: r["name"])

    widths = {
        c: max(len(c), max((len(r.get(c, "-")) for r in rows), default=0))
        for c in _COLUMNS
    }
    header = "  ".join(c.ljust(widths[c]) for c in _COLUMNS)
    print(header)
    print("-" * len(header))
    for r in rows:
        print("  ".join(str(r.get(c, "-")).ljust(widths[c]) for c in _COLUMNS))
        if "error" in r:
            print(f"  ! {r['error']}", file=sys.stderr)
    print()
    for r in rows:
        fields = " ".join(f"{c}={r.get(c, '-')}" for c in _COLUMNS)
        print(f"record {fields}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopforge",
        description="Synthesize and verify polynomial loops from invariants.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_text in (
        ("synth", cmd_synth, "generate (and optionally solve) a coefficient system"),
        ("check", cmd_check, "verify a concrete loop against its invariants"),
        ("bench", cmd_bench, "run a corpus directory and print a results table"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("path", help="problem file (synth/check) or corpus directory (bench)")
        p.add_argument("--solve", action="store_true",
                       help="run the SMT solver on the generated system")
        p.add_argument("--solver-cmd", default=None,
                       help="solver command line (default: 'z3 -in', else the "
                            "LOOPFORGE_SOLVER environment variable, else the "
                            "bundled fallback solver)")
        p.add_argument("--timeout", type=int, default=DEFAULT_TIMEOUT_SECONDS,
                       help="per-stage timeout in seconds (default 300)")
        p.add_argument("--sort", choices=("int", "real"), default="int",
                       help="number sort for the SMT encoding (default int)")
        p.add_argument("--nonzero", choices=("any", "per-branch", "none"), default="any",
                       help="nonzero-solution policy in the SMT encoding (default any)")
        p.add_argument("--emit-smt", metavar="PATH", default=None,
                       help="write the SMT-LIB text to PATH")
        p.add_argument("--finiteness", action="store_true",
                       help="classify whether the system has finitely many solutions")
        p.add_argument("--max-rounds", type=int, default=DEFAULT_MAX_ROUNDS,
                       help="cap on invariant-chain rounds (default %(default)s)")
        p.add_argument("--jobs", type=int, default=None,
                       help="bench worker count (default: host processors)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for sampled simulation words (default 0)")
        p.set_defaults(fn=fn)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, RingError, SolveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RoundCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
