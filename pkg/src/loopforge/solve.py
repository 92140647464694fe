"""Back ends that find rational or integer points of generated systems.

Two routes.  The SMT route serializes a :class:`~loopforge.synth.PolynomialSystem`
to SMT-LIB 2.6 text (:func:`emit_smtlib`) and drives an external solver over
process pipes (:func:`run_smt`); any compliant solver is substitutable since
the interface is plain text.  The algebraic route handles the fully
decidable fragment: :func:`classify_finiteness` decides whether a system has
finitely many complex solutions, and :func:`solve_zero_dim_rational`
enumerates *all* rational points of a zero-dimensional system by lex
elimination and rational-root extraction.

Every sat model coming back from a solver is substituted into every source
equation and must evaluate to exactly zero — a model that does not is
reported as malformed, never returned.
"""

from __future__ import annotations

import math
import os
import shlex
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .groebner import (
    INFINITE,
    LEX,
    NotZeroDimensionalError,
    buchberger,
    is_zero_dimensional,
    solution_count,
)
from .ring import Polynomial, RingError, VarContext
from .synth import PolynomialSystem

SOLVER_ENV_VAR = "LOOPFORGE_SOLVER"
DEFAULT_SOLVER_COMMAND = "z3 -in"
DEFAULT_TIMEOUT_SECONDS = 300
ROOT_CANDIDATE_CAP = 10**6

NUMBER_SORTS = ("int", "real")
NONZERO_POLICIES = ("any", "per-branch", "none")


class SolveError(RingError):
    pass


class SolverNotFoundError(SolveError):
    """No SMT solver could be located to run the job."""


class MalformedModelError(SolveError):
    """The solver answered sat but its model is unusable.

    Carries the solver's raw output so the failure can be diagnosed.
    """

    def __init__(self, message: str, raw: str):
        super().__init__(f"{message}\n--- solver output ---\n{raw}")
        self.raw = raw


class RootCandidateCapError(SolveError):
    """Rational-root candidate enumeration exceeded its cap."""


@dataclass(frozen=True)
class SmtJob:
    system: PolynomialSystem
    number_sort: str = "int"
    nonzero_policy: str = "any"
    timeout_seconds: int = DEFAULT_TIMEOUT_SECONDS
    extra_assertions: tuple[str, ...] = ()

    def __post_init__(self):
        if self.number_sort not in NUMBER_SORTS:
            raise SolveError(f"number_sort must be one of {NUMBER_SORTS}")
        if self.nonzero_policy not in NONZERO_POLICIES:
            raise SolveError(f"nonzero_policy must be one of {NONZERO_POLICIES}")
        if self.timeout_seconds <= 0:
            raise SolveError("timeout must be positive")


@dataclass(frozen=True)
class SolveOutcome:
    status: str  # "sat" | "unsat" | "unknown" | "timeout"
    model: dict[str, Fraction] = field(default_factory=dict)
    wall_time: float = 0.0

    def is_sat(self) -> bool:
        return self.status == "sat"


# ---------------------------------------------------------------------------
# SMT-LIB emission
# ---------------------------------------------------------------------------


def _monomial_sexpr(m: tuple, coeff: int, names: Sequence[str]) -> str:
    factors = [str(coeff)] if coeff != 1 or not any(m) else []
    for name, e in zip(names, m):
        factors.extend([name] * e)
    if not factors:
        return "1"
    if len(factors) == 1:
        return factors[0]
    return "(* " + " ".join(factors) + ")"


def _sum_sexpr(parts: list[str]) -> str:
    if not parts:
        return "0"
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def _equation_sexpr(eq: Polynomial) -> str:
    """`(= (- pos neg) 0)` with integer coefficients (lcm-cleared)."""
    den = 1
    for c in eq.terms.values():
        den = math.lcm(den, c.denominator)
    names = eq.ctx.names
    pos: list[str] = []
    neg: list[str] = []
    for m, c in eq.sorted_terms():
        k = int(c * den)
        if k > 0:
            pos.append(_monomial_sexpr(m, k, names))
        else:
            neg.append(_monomial_sexpr(m, -k, names))
    if not neg:
        return f"(= {_sum_sexpr(pos)} 0)"
    return f"(= (- {_sum_sexpr(pos)} {_sum_sexpr(neg)}) 0)"


def emit_smtlib(job: SmtJob) -> str:
    """SMT-LIB 2.6 text for the job; byte-identical for identical input."""
    system = job.system
    if not system.equations:
        raise SolveError("cannot emit an empty system")
    logic = "QF_NIA" if job.number_sort == "int" else "QF_NRA"
    sort = "Int" if job.number_sort == "int" else "Real"
    lines = [f"(set-logic {logic})"]
    for name in system.unknowns:
        lines.append(f"(declare-const {name} {sort})")
    for eq in system.equations:
        lines.append(f"(assert {_equation_sexpr(eq)})")
    if job.nonzero_policy == "any":
        targets = system.coefficient_names or system.unknowns
        disj = " ".join(f"(not (= {n} 0))" for n in targets)
        lines.append(f"(assert (or {disj}))" if len(targets) > 1 else f"(assert {disj})")
    elif job.nonzero_policy == "per-branch":
        groups = system.branch_groups or (system.coefficient_names,)
        for group in groups:
            names = [n for n in group if n in system.unknowns]
            if not names:
                continue
            disj = " ".join(f"(not (= {n} 0))" for n in names)
            lines.append(
                f"(assert (or {disj}))" if len(names) > 1 else f"(assert {disj})"
            )
    for extra in job.extra_assertions:
        lines.append(f"(assert {extra})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# external solver driver
# ---------------------------------------------------------------------------


def resolve_solver_command(explicit: str | None = None) -> list[str]:
    """Pick the solver command: explicit > $LOOPFORGE_SOLVER > z3 > bundled.

    The bundled fallback is this package's own miniature SMT-LIB solver,
    spawned as a child process exactly like any external one.
    """
    if explicit:
        return shlex.split(explicit)
    env = os.environ.get(SOLVER_ENV_VAR)
    if env:
        return shlex.split(env)
    if shutil.which("z3"):
        return shlex.split(DEFAULT_SOLVER_COMMAND)
    return [sys.executable, "-m", "loopforge.minismt"]


def _tokenize_sexpr(text: str) -> Iterator[str]:
    token = []
    for ch in text:
        if ch in "()":
            if token:
                yield "".join(token)
                token = []
            yield ch
        elif ch.isspace():
            if token:
                yield "".join(token)
                token = []
        else:
            token.append(ch)
    if token:
        yield "".join(token)


def _parse_sexprs(text: str) -> list:
    stack: list[list] = [[]]
    for tok in _tokenize_sexpr(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SolveError("unbalanced solver output")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    return stack[0]


def _numeric_value(expr) -> Fraction:
    if isinstance(expr, str):
        if "." in expr:
            whole, _, frac = expr.partition(".")
            frac = frac or "0"
            return Fraction(int(whole + frac), 10 ** len(frac))
        return Fraction(int(expr))
    if isinstance(expr, list) and expr:
        head = expr[0]
        if head == "-" and len(expr) == 2:
            return -_numeric_value(expr[1])
        if head == "/" and len(expr) == 3:
            return _numeric_value(expr[1]) / _numeric_value(expr[2])
    raise SolveError(f"cannot read a numeric value from {expr!r}")


def _model_bindings(sexprs: list) -> dict[str, Fraction]:
    bindings: dict[str, Fraction] = {}

    def walk(node):
        if isinstance(node, list):
            if len(node) == 5 and node[0] == "define-fun" and node[2] == []:
                bindings[node[1]] = _numeric_value(node[4])
            else:
                for child in node:
                    walk(child)

    for node in sexprs:
        walk(node)
    return bindings


def run_smt(job: SmtJob, solver_command: str | Sequence[str] | None = None) -> SolveOutcome:
    """Run the job on an external solver and return the checked outcome.

    The solver gets the emitted SMT-LIB text on standard input and is
    killed at the job's timeout (reported as a ``timeout`` outcome, not an
    error).  A sat answer is accepted only after the parsed model has been
    substituted into every source equation and evaluated to exactly zero.
    """
    if solver_command is None or isinstance(solver_command, str):
        argv = resolve_solver_command(solver_command)
    else:
        argv = list(solver_command)
    text = emit_smtlib(job)
    start = time.monotonic()
    try:
        proc = subprocess.run(
            argv,
            input=text,
            capture_output=True,
            text=True,
            timeout=job.timeout_seconds,
        )
    except FileNotFoundError as exc:
        raise SolverNotFoundError(f"solver executable not found: {argv[0]}") from exc
    except subprocess.TimeoutExpired:
        return SolveOutcome("timeout", {}, time.monotonic() - start)
    wall = time.monotonic() - start

    out = proc.stdout
    first = next((line.strip() for line in out.splitlines() if line.strip()), "")
    if first == "unsat":
        return SolveOutcome("unsat", {}, wall)
    if first == "unknown":
        return SolveOutcome("unknown", {}, wall)
    if first != "sat":
        raise SolveError(
            f"solver produced no verdict (exit {proc.returncode})\n"
            f"--- stdout ---\n{out}\n--- stderr ---\n{proc.stderr}"
        )

    rest = out.split("sat", 1)[1]
    bindings = _model_bindings(_parse_sexprs(rest))
    system = job.system
    missing = [n for n in system.unknowns if n not in bindings]
    if missing:
        raise MalformedModelError(f"model misses unknowns {missing}", out)
    if job.number_sort == "int":
        broken = [n for n in system.unknowns if bindings[n].denominator != 1]
        if broken:
            raise MalformedModelError(
                f"integer-sort model binds non-integers at {broken}", out
            )
    values = [bindings[n] for n in system.unknowns]
    for eq in system.equations:
        if eq.evaluate(values):
            raise MalformedModelError(
                f"model does not satisfy {eq}", out
            )
    model = {n: bindings[n] for n in system.unknowns}
    return SolveOutcome("sat", model, wall)


# ---------------------------------------------------------------------------
# algebraic route
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Finiteness:
    status: str  # "finite" | "infinite" | "empty"
    count: int | None = None  # solutions with multiplicity when finite


def classify_finiteness(system: PolynomialSystem) -> Finiteness:
    """Decide whether the system has no, finitely many, or infinitely many
    complex solutions (counting the finite case with multiplicity)."""
    if not system.equations:
        return Finiteness("finite", 1) if not system.unknowns else Finiteness("infinite")
    basis = buchberger(system.equations)
    if basis.is_unit_ideal():
        return Finiteness("empty", 0)
    count = solution_count(basis)
    if count is INFINITE:
        return Finiteness("infinite")
    return Finiteness("finite", int(count))


def _divisors(n: int, cap: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i != n // i:
                large.append(n // i)
            if len(small) + len(large) > cap:
                raise RootCandidateCapError(
                    f"more than {cap} divisor candidates for {n}"
                )
        i += 1
    return small + large[::-1]


def rational_roots(
    coeffs: Sequence[Fraction], cap: int = ROOT_CANDIDATE_CAP
) -> list[Fraction]:
    """All rational roots of Σ coeffs[i]·xⁱ, each listed once, ascending.

    Uses the rational-root theorem on the denominator-cleared primitive
    form; the number of candidate fractions p/q is capped (degenerate
    constant terms have huge divisor counts).
    """
    coeffs = [Fraction(c) for c in coeffs]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if not coeffs:
        raise SolveError("the zero polynomial has every root")
    if len(coeffs) == 1:
        return []
    den = 1
    for c in coeffs:
        den = math.lcm(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    g = 0
    for k in ints:
        g = math.gcd(g, k)
    ints = [k // g for k in ints]

    roots = []
    if ints[0] == 0:
        roots.append(Fraction(0))
        while ints and ints[0] == 0:
            ints.pop(0)
    if len(ints) > 1:
        p_divs = _divisors(ints[0], cap)
        q_divs = _divisors(ints[-1], cap)
        if len(p_divs) * len(q_divs) * 2 > cap:
            raise RootCandidateCapError(
                f"{len(p_divs) * len(q_divs) * 2} root candidates exceed the cap {cap}"
            )
        seen = set(roots)
        for q in q_divs:
            for p in p_divs:
                for cand in (Fraction(p, q), Fraction(-p, q)):
                    if cand in seen:
                        continue
                    acc = Fraction(0)
                    for c in reversed(ints):
                        acc = acc * cand + c
                    if acc == 0:
                        seen.add(cand)
                        roots.append(cand)
    return sorted(roots)


def _univariate_coeffs(p: Polynomial, index: int) -> list[Fraction]:
    coeffs: list[Fraction] = []
    for m, c in p.terms.items():
        if any(e and i != index for i, e in enumerate(m)):
            raise SolveError("polynomial is not univariate in the chosen variable")
        e = m[index]
        while len(coeffs) <= e:
            coeffs.append(Fraction(0))
        coeffs[e] += c
    return coeffs


def _point_enumeration(
    ctx: VarContext, equations: list[Polynomial], cap: int
) -> list[tuple[Fraction, ...]]:
    if not equations:
        if len(ctx):
            raise NotZeroDimensionalError("empty system over nonzero unknowns")
        return [()]
    basis = buchberger(equations, order=LEX, ctx=ctx)
    if basis.is_unit_ideal():
        return []
    if not is_zero_dimensional(basis):
        raise NotZeroDimensionalError("system has infinitely many complex solutions")
    n = len(ctx)
    last = n - 1
    uni = next(
        (g for g in basis.gens if g.variables_used() == (last,)), None
    )
    if uni is None:
        raise NotZeroDimensionalError(
            "no univariate eliminant in the last unknown"
        )
    roots = rational_roots(_univariate_coeffs(uni, last), cap)
    if n == 1:
        return [
            (r,)
            for r in roots
            if all(not eq.evaluate([r]) for eq in equations)
        ]
    front = ctx.restrict(tuple(range(n - 1)))
    out: list[tuple[Fraction, ...]] = []
    for root in roots:
        reduced = []
        for eq in equations:
            sub = eq.substitute({ctx.names[last]: root})
            sub = Polynomial(front, {m[: n - 1]: c for m, c in sub.terms.items()})
            if not sub.is_zero():
                reduced.append(sub)
        for prefix in _point_enumeration(front, reduced, cap):
            out.append(prefix + (root,))
    return sorted(out)


def solve_zero_dim_rational(
    system: PolynomialSystem, cap: int = ROOT_CANDIDATE_CAP
) -> list[tuple[Fraction, ...]]:
    """Every rational solution of a zero-dimensional system, sorted.

    Lex elimination produces a generator univariate in the last unknown;
    its rational roots are extracted, substituted back, and the smaller
    system is solved recursively.  The result is complete: a rational
    point outside the returned list would contradict the elimination
    property of lex bases.
    """
    return _point_enumeration(system.ctx, list(system.equations), cap)
