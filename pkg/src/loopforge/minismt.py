"""A miniature SMT-LIB solver for polynomial equation systems.

This is the bundled fallback behind :func:`loopforge.solve.resolve_solver_command`:
when no external solver is installed, jobs run against this module as a child
process (``python -m loopforge.minismt``), reading SMT-LIB 2 text on standard
input and answering ``sat`` + model / ``unsat`` / ``unknown`` on standard
output, in the same shape z3 would.

It handles the fragment this package emits: ``QF_NIA``/``QF_NRA``
declarations, polynomial equality assertions, and boolean combinations
(``or``/``and``/``not``/``distinct``) used by the nonzero policies.  The
search is exact backtracking over rational assignments:

* equations that become univariate under the current partial assignment
  are branched on their *exact* rational (integer, under Int sorts) roots —
  an exhaustive, sound case split under Int; under Real the same split at
  degree two or higher may miss irrational roots, so exhausting it
  degrades a would-be ``unsat`` to ``unknown``;
* when no equation is univariate, a small integer ladder (0, ±1, ±2, …) is
  tried on the most-constrained variable, and the search remembers that it
  guessed: answers degrade from ``unsat`` to ``unknown`` when exhaustion
  relied on a ladder.

``sat`` is only ever printed after every assertion has been re-evaluated
exactly at the full assignment, so a sat answer from this module carries
the same weight as one from a production solver; ``unsat`` is printed only
for searches that never guessed.
"""

from __future__ import annotations

import sys
from fractions import Fraction
from typing import Sequence

from .ring import Polynomial, VarContext
from .solve import SolveError, _numeric_value, _parse_sexprs, rational_roots

LADDER_BOUND = 5
NODE_CAP = 200_000


class _Input:
    def __init__(self):
        self.names: list[str] = []
        self.sorts: dict[str, str] = {}
        self.asserts: list = []
        self.check = False
        self.want_model = False


def _read_script(text: str) -> _Input:
    script = _Input()
    for form in _parse_sexprs(text):
        if not isinstance(form, list) or not form:
            continue
        head = form[0]
        if head == "declare-const" and len(form) == 3:
            script.names.append(form[1])
            script.sorts[form[1]] = form[2]
        elif head == "declare-fun" and len(form) == 4 and form[2] == []:
            script.names.append(form[1])
            script.sorts[form[1]] = form[3]
        elif head == "assert" and len(form) == 2:
            script.asserts.append(form[1])
        elif head == "check-sat":
            script.check = True
        elif head == "get-model":
            script.want_model = True
        # set-logic / set-option / set-info / exit need no action
    return script


def _to_polynomial(expr, ctx: VarContext) -> Polynomial:
    if isinstance(expr, str):
        if expr in ctx.names:
            return Polynomial.variable(ctx, expr)
        return Polynomial.constant(ctx, _numeric_value(expr))
    head = expr[0] if expr else None
    args = expr[1:]
    if head == "+":
        acc = Polynomial.zero(ctx)
        for a in args:
            acc = acc + _to_polynomial(a, ctx)
        return acc
    if head == "-":
        if len(args) == 1:
            return -_to_polynomial(args[0], ctx)
        acc = _to_polynomial(args[0], ctx)
        for a in args[1:]:
            acc = acc - _to_polynomial(a, ctx)
        return acc
    if head == "*":
        acc = Polynomial.constant(ctx, 1)
        for a in args:
            acc = acc * _to_polynomial(a, ctx)
        return acc
    if head == "/" and len(args) == 2:
        num = _to_polynomial(args[0], ctx)
        den = _to_polynomial(args[1], ctx)
        if not den.is_constant():
            raise SolveError("division by a non-constant is outside the fragment")
        return num * (Fraction(1) / den.constant_value())
    raise SolveError(f"arithmetic operator outside the fragment: {head!r}")


def _split_asserts(asserts: list, ctx: VarContext):
    """Partition assertions into polynomial equations and boolean trees."""
    equations: list[Polynomial] = []
    booleans: list = []
    for a in asserts:
        if isinstance(a, list) and a and a[0] == "=" and len(a) == 3:
            try:
                equations.append(_to_polynomial(a[1], ctx) - _to_polynomial(a[2], ctx))
                continue
            except SolveError:
                pass
        booleans.append(a)
    return equations, booleans


def _eval_bool(expr, values: dict[str, Fraction], ctx: VarContext) -> bool:
    if isinstance(expr, str):
        if expr == "true":
            return True
        if expr == "false":
            return False
        raise SolveError(f"boolean atom outside the fragment: {expr!r}")
    head = expr[0] if expr else None
    args = expr[1:]
    if head == "or":
        return any(_eval_bool(a, values, ctx) for a in args)
    if head == "and":
        return all(_eval_bool(a, values, ctx) for a in args)
    if head == "not" and len(args) == 1:
        return not _eval_bool(args[0], values, ctx)
    if head == "=" and len(args) == 2:
        return _eval_number(args[0], values, ctx) == _eval_number(args[1], values, ctx)
    if head == "distinct":
        nums = [_eval_number(a, values, ctx) for a in args]
        return len(set(nums)) == len(nums)
    raise SolveError(f"boolean operator outside the fragment: {head!r}")


def _eval_number(expr, values: dict[str, Fraction], ctx: VarContext) -> Fraction:
    if isinstance(expr, str) and expr in values:
        return values[expr]
    poly = _to_polynomial(expr, ctx)
    return poly.evaluate([values[n] for n in ctx.names])


def _bind(eq: Polynomial, index: int, value: Fraction) -> Polynomial:
    """Pin one variable to a value without changing the ambient context."""
    items = []
    for m, c in eq.terms.items():
        e = m[index]
        if e:
            c = c * value**e
            if not c:
                continue
            m = m[:index] + (0,) + m[index + 1 :]
        items.append((m, c))
    return Polynomial.from_items(eq.ctx, items)


class _Search:
    def __init__(self, ctx: VarContext, equations, booleans, integer: bool):
        self.ctx = ctx
        self.equations = equations
        self.booleans = booleans
        self.integer = integer
        self.nodes = 0
        self.guessed = False  # a ladder branch truncated the space
        self.lossy = False  # Real-sort branching skipped irrational roots
        self.capped = False

    def _substituted(self, eq: Polynomial, values: dict[str, Fraction]) -> Polynomial:
        bound = {n: v for n, v in values.items()}
        return eq.substitute(bound) if bound else eq

    def _univariate_roots(self, eq: Polynomial) -> tuple[int, list[Fraction]] | None:
        used = eq.variables_used()
        if len(used) != 1:
            return None
        index = used[0]
        coeffs: list[Fraction] = []
        degree = 0
        for m, c in eq.terms.items():
            e = m[index]
            degree = max(degree, e)
            while len(coeffs) <= e:
                coeffs.append(Fraction(0))
            coeffs[e] += c
        roots = rational_roots(coeffs)
        if self.integer:
            roots = [r for r in roots if r.denominator == 1]
        elif degree >= 2:
            # Over the reals a quadratic-or-higher equation may have
            # irrational solutions this enumeration cannot see, so any
            # pruning based on it makes a later "unsat" inconclusive.
            self.lossy = True
        return index, roots

    def run(self) -> tuple[str, dict[str, Fraction]]:
        try:
            model = self._solve({}, list(self.equations))
        except _NodeCap:
            return "unknown", {}
        if model is not None:
            return "sat", model
        if self.guessed or self.capped or self.lossy:
            return "unknown", {}
        return "unsat", {}

    def _solve(
        self, values: dict[str, Fraction], pending: list[Polynomial]
    ) -> dict[str, Fraction] | None:
        self.nodes += 1
        if self.nodes > NODE_CAP:
            self.capped = True
            raise _NodeCap()

        # propagate forced assignments until nothing is univariate
        forced = True
        while forced:
            forced = False
            remaining = []
            for eq in pending:
                if eq.is_zero():
                    continue
                if eq.is_constant():
                    return None  # contradiction
                uni = self._univariate_roots(eq)
                if uni is not None:
                    index, roots = uni
                    if not roots:
                        return None
                    if len(roots) == 1:
                        name = self.ctx.names[index]
                        values = {**values, name: roots[0]}
                        pending = [
                            _bind(q, index, roots[0])
                            for q in pending
                            if q is not eq
                        ]
                        forced = True
                        break
                remaining.append(eq)
            else:
                pending = remaining

        live = [eq for eq in pending if not eq.is_zero()]
        if any(eq.is_constant() for eq in live):
            return None

        unassigned = [n for n in self.ctx.names if n not in values]
        if not unassigned:
            if all(not eq.evaluate([values[n] for n in self.ctx.names]) for eq in self.equations) and all(
                _eval_bool(b, values, self.ctx) for b in self.booleans
            ):
                return dict(values)
            return None

        # exact case split: some equation univariate with several roots
        best: tuple[int, list[Fraction]] | None = None
        for eq in live:
            uni = self._univariate_roots(eq)
            if uni is not None and (best is None or len(uni[1]) < len(best[1])):
                best = uni
        if best is not None:
            index, roots = best
            name = self.ctx.names[index]
            for root in roots:
                result = self._solve(
                    {**values, name: root},
                    [_bind(q, index, root) for q in live],
                )
                if result is not None:
                    return result
            return None

        # heuristic ladder on the most-mentioned unassigned variable
        counts = {n: 0 for n in unassigned}
        for eq in live:
            for i in eq.variables_used():
                n = self.ctx.names[i]
                if n in counts:
                    counts[n] += 1
        name = max(unassigned, key=lambda n: (counts[n], -unassigned.index(n)))
        index = self.ctx.index(name)
        self.guessed = True
        ladder = [0] + [s * k for k in range(1, LADDER_BOUND + 1) for s in (1, -1)]
        for v in ladder:
            value = Fraction(v)
            result = self._solve(
                {**values, name: value},
                [_bind(q, index, value) for q in live],
            )
            if result is not None:
                return result
        return None


class _NodeCap(Exception):
    pass


def _format_value(v: Fraction, sort: str) -> str:
    if v.denominator == 1:
        body = str(v.numerator) if v >= 0 else f"(- {-v.numerator})"
        return body
    body = f"(/ {abs(v.numerator)} {v.denominator})"
    return body if v >= 0 else f"(- {body})"


def solve_text(text: str) -> str:
    """Answer an SMT-LIB script with the same text a solver binary would."""
    script = _read_script(text)
    if not script.check:
        return ""
    if not script.names:
        return "sat\n(model\n)\n"
    ctx = VarContext.make(tuple(script.names))
    equations, booleans = _split_asserts(script.asserts, ctx)
    integer = all(script.sorts[n] == "Int" for n in script.names)
    status, model = _Search(ctx, equations, booleans, integer).run()
    if status != "sat":
        return status + "\n"
    lines = ["sat", "(model"]
    for name in script.names:
        sort = script.sorts[name]
        lines.append(
            f"  (define-fun {name} () {sort} {_format_value(model[name], sort)})"
        )
    lines.append(")")
    return "\n".join(lines) + "\n"


def main() -> int:
    text = sys.stdin.read()
    try:
        sys.stdout.write(solve_text(text))
    except SolveError as exc:
        sys.stdout.write("unknown\n")
        print(f"; {exc}", file=sys.stderr)
        return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
