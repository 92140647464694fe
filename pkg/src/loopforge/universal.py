"""Universally preserved invariants: coefficient comparison, no ideal theory.

A polynomial g is preserved from *every* start state exactly when g∘F_j = g
as polynomials for each branch map F_j.  Writing the update maps with
unknown coefficients, g∘F_j − g = 0 becomes a finite set of equations — the
coefficients of the x-monomials — and no fixed-point iteration or Gröbner
basis is involved.  When every g is affine those equations are linear in
the unknowns, and the solution set is an affine subspace computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .ring import (
    COEFFICIENT,
    PolyMap,
    Polynomial,
    VarContext,
    compose,
    grevlex_key,
)
from .synth import EquationOrigin, LoopTemplate, PolynomialSystem, SynthError


def _symbolic_branch_maps(
    template: LoopTemplate,
) -> tuple[VarContext, list[PolyMap], tuple[tuple[tuple[str, ...], ...], ...]]:
    """Per-branch maps with fresh unknown coefficients, over x ∪ y."""
    prog = template.ctx
    y_names = template.coefficient_names()
    flat = [n for branch in y_names for row in branch for n in row]
    ctx = prog.extend(tuple(flat), COEFFICIENT)
    maps = []
    for i, branch in enumerate(template.branches):
        updates = []
        for j, gens in enumerate(branch):
            comp = Polynomial.zero(ctx)
            for l, gen in enumerate(gens):
                comp = comp + Polynomial.variable(ctx, y_names[i][j][l]) * gen.cast(ctx)
            updates.append(comp)
        maps.append(PolyMap.from_program_updates(ctx, updates))
    return ctx, maps, y_names


def compute_loops_universal(
    gs: Sequence[Polynomial] | Polynomial, template: LoopTemplate
) -> PolynomialSystem:
    """Equations cutting out the coefficient vectors with g∘F_j = g for all j.

    For each invariant g and branch j, the x-monomial coefficients of
    g∘F_j − g are collected (descending grevlex on the x-monomial), zeros
    dropped, and duplicates removed up to a scalar factor.  The guard plays
    no role: a never-stopping run and a sometimes-stopping run impose the
    same polynomial identities.
    """
    if isinstance(gs, Polynomial):
        gs = [gs]
    if not gs:
        raise SynthError("need at least one invariant")
    prog = template.ctx
    for g in gs:
        if g.ctx != prog:
            raise SynthError("invariants must live over the template context")

    ctx, maps, y_names = _symbolic_branch_maps(template)
    x_indices = tuple(range(len(prog)))
    y_only = ctx.restrict(tuple(range(len(prog), len(ctx))))

    equations: list[Polynomial] = []
    origins: list[EquationOrigin] = []
    seen: set = set()
    for i, g in enumerate(gs):
        g_ext = g.cast(ctx)
        for j, fmap in enumerate(maps):
            diff = compose(g_ext, fmap) - g_ext
            for monomial, coeff in diff.coefficients_wrt(x_indices):
                if coeff.is_zero():
                    continue
                eq = coeff.cast(y_only)
                key = tuple(sorted(eq.primitive_normalized().terms.items()))
                if key in seen:
                    continue
                seen.add(key)
                equations.append(eq)
                origins.append(
                    EquationOrigin(i, (j,), 1, monomial=monomial[: len(prog)])
                )

    branch_groups = tuple(
        tuple(n for row in branch for n in row) for branch in y_names
    )
    return PolynomialSystem(y_only, tuple(equations), tuple(origins), branch_groups)


@dataclass(frozen=True)
class AffineSpace:
    """v + span(basis) in ℚ^ambient_dim; ``particular is None`` ⇔ no solution.

    The infeasible marker is deliberately distinct from a zero-dimensional
    space (a single point, ``basis == ()``): "the only loop is the identity"
    and "no loop with this structure exists" are different answers.
    """

    particular: tuple[Fraction, ...] | None
    basis: tuple[tuple[Fraction, ...], ...]
    ambient_dim: int

    @property
    def is_infeasible(self) -> bool:
        return self.particular is None

    @property
    def dim(self) -> int:
        if self.particular is None:
            raise ValueError("infeasible system has no dimension")
        return len(self.basis)

    def contains(self, vector: Sequence[Fraction | int]) -> bool:
        """Exact membership: vector − particular ∈ span(basis)."""
        if self.particular is None:
            return False
        v = [Fraction(c) for c in vector]
        if len(v) != self.ambient_dim:
            raise ValueError("vector has wrong length")
        rows = [list(b) for b in self.basis]
        rows.append([vi - pi for vi, pi in zip(v, self.particular)])
        return _rank(rows) == len(self.basis)


def _rank(rows: list[list[Fraction]]) -> int:
    rows = [list(r) for r in rows]
    rank = 0
    cols = len(rows[0]) if rows else 0
    for col in range(cols):
        pivot = next(
            (i for i in range(rank, len(rows)) if rows[i][col] != 0), None
        )
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = Fraction(1) / rows[rank][col]
        rows[rank] = [c * inv for c in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                factor = rows[i][col]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


class LinearSystemError(SynthError):
    pass


def _linear_rows(
    equations: Sequence[Polynomial], ctx: VarContext
) -> list[list[int]]:
    """Integer rows [a_1 … a_n | c] for equations Σ a_i·v_i + c = 0."""
    n = len(ctx)
    rows = []
    for eq in equations:
        if eq.ctx != ctx:
            raise LinearSystemError("equations must share one context")
        if eq.total_degree() > 1:
            raise LinearSystemError(
                f"equation of degree {eq.total_degree()} in a linear solve"
            )
        row = [Fraction(0)] * (n + 1)
        for monomial, coeff in eq.terms.items():
            deg = sum(monomial)
            if deg == 0:
                row[n] = coeff
            else:
                row[monomial.index(1)] = coeff
        lcm = 1
        for c in row:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        rows.append([int(c * lcm) for c in row])
    return rows


def _forward_eliminate(rows: list[list[int]], n: int):
    """Fraction-free (Bareiss) elimination.

    Returns (echelon rows, pivot column list) or raises on an inconsistent
    row (all coefficient entries zero, constant nonzero).
    """
    rows = [list(r) for r in rows if any(r)]
    pivots: list[int] = []
    r = 0
    prev = 1
    for col in range(n):
        pivot = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        lead = rows[r][col]
        for i in range(r + 1, len(rows)):
            factor = rows[i][col]
            rows[i] = [
                (lead * rows[i][j] - factor * rows[r][j]) // prev
                for j in range(n + 1)
            ]
        prev = lead
        pivots.append(col)
        r += 1
    for i in range(r, len(rows)):
        if any(rows[i][:n]):
            raise AssertionError("elimination left a live row below the pivots")
        if rows[i][n] != 0:
            raise LinearSystemError("infeasible")
    return rows[:r], pivots


def _back_substitute(
    echelon: list[list[int]],
    pivots: list[int],
    n: int,
    free_values: dict[int, Fraction],
    homogeneous: bool,
) -> list[Fraction]:
    out = [Fraction(0)] * n
    for col, val in free_values.items():
        out[col] = val
    for r in range(len(pivots) - 1, -1, -1):
        col = pivots[r]
        row = echelon[r]
        acc = Fraction(0) if homogeneous else Fraction(row[n])
        for j in range(col + 1, n):
            if row[j]:
                acc += row[j] * out[j]
        out[col] = -acc / row[col]
    return out


def solve_linear(
    equations: Sequence[Polynomial], ctx: VarContext | None = None
) -> tuple[Fraction, ...] | None:
    """One exact solution (free variables at 0), or None when inconsistent."""
    if ctx is None:
        if not equations:
            raise LinearSystemError("empty system needs an explicit context")
        ctx = equations[0].ctx
    n = len(ctx)
    try:
        echelon, pivots = _forward_eliminate(_linear_rows(equations, ctx), n)
    except LinearSystemError as e:
        if str(e) == "infeasible":
            return None
        raise
    free = {c: Fraction(0) for c in range(n) if c not in pivots}
    return tuple(_back_substitute(echelon, pivots, n, free, homogeneous=False))


def nullspace_basis(
    equations: Sequence[Polynomial], ctx: VarContext | None = None
) -> list[tuple[Fraction, ...]]:
    """Basis of the homogeneous solution space, one vector per free column."""
    if ctx is None:
        if not equations:
            raise LinearSystemError("empty system needs an explicit context")
        ctx = equations[0].ctx
    n = len(ctx)
    rows = _linear_rows(equations, ctx)
    for row in rows:
        row[n] = 0
    echelon, pivots = _forward_eliminate(rows, n)
    basis = []
    free_cols = [c for c in range(n) if c not in pivots]
    for fc in free_cols:
        free = {c: Fraction(1 if c == fc else 0) for c in free_cols}
        basis.append(
            tuple(_back_substitute(echelon, pivots, n, free, homogeneous=True))
        )
    return basis


def compute_loops_linear_universal(
    gs: Sequence[Polynomial] | Polynomial, template: LoopTemplate
) -> AffineSpace:
    """Affine solution space of the coefficient equations for affine g.

    Coefficient comparison on affine invariants yields equations of degree
    ≤ 1 in the unknowns, so the coefficient set is v + span(B), computed by
    exact elimination.  Unknowns are ordered branch-major, variable-major,
    generator-minor — the template's flat coefficient order.
    """
    if isinstance(gs, Polynomial):
        gs = [gs]
    for g in gs:
        if g.total_degree() > 1:
            raise SynthError(
                "linear-universal synthesis needs affine invariants; "
                f"got degree {g.total_degree()}"
            )
    system = compute_loops_universal(gs, template)
    ctx = system.ctx
    particular = solve_linear(system.equations, ctx)
    if particular is None:
        return AffineSpace(None, (), len(ctx))
    basis = tuple(nullspace_basis(system.equations, ctx))
    return AffineSpace(particular, basis, len(ctx))
