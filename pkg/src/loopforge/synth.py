"""Loop synthesis: from invariant targets to polynomial constraint systems.

A :class:`LoopTemplate` fixes the shape of the loops being searched for:
per branch and per program variable, a list of generator polynomials whose
unknown coefficients span the candidate update maps.  Attaching invariant
targets, an optional guard, and an optional initial state gives a
:class:`SynthesisProblem`.

The pipeline lifts the problem into an extended space — coefficient
unknowns y (one per generator), a guard-flag coordinate z that accumulates
guard factors along a run, and guard-template coefficients w when the
guard itself is unknown:

    H_i(x, y, z, w) = ( Σ_l y_{i,1,l}·f_{i,1,l}(x), …,  y,  z·h(x,w),  w )

Running the invariant-set fixed point on (z·g₁, …, z·g_m) under these maps
and then substituting z := 1 (and x := a when an initial state is given)
yields a finite system of polynomial equations in the unknowns alone,
whose solutions are exactly the coefficient choices making every gᵢ an
invariant of the synthesized loop.  When the guard is a nonzero constant
the z coordinate is algebraically inert (z·p ∈ √⟨z·s₁,…⟩ ⇔ p ∈ √⟨s₁,…⟩ for
z-free p, sᵢ), so the fixed point runs without it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .invariant import (
    DEFAULT_EFFORT,
    DEFAULT_MAX_ROUNDS,
    InvariantSetResult,
    invariant_set_branch,
)
from .ring import (
    COEFFICIENT,
    GUARD_COEFF,
    GUARD_FLAG,
    PROGRAM,
    PolyMap,
    Polynomial,
    Rat,
    RingError,
    VarContext,
    compose,
)


class SynthError(RingError):
    pass


@dataclass(frozen=True)
class Guard:
    """Loop guard: absent, a concrete polynomial, or an unknown combination.

    Multi-part concrete guards (h₁ ≠ 0 ∧ h₂ ≠ 0) are folded into the single
    product polynomial up front, since the product is nonzero exactly where
    every factor is.  A template guard keeps its parts: the synthesized
    guard is Σ w_q·h_q with fresh unknowns w_q.
    """

    kind: str  # "none" | "concrete" | "template"
    parts: tuple[Polynomial, ...] = ()

    def __post_init__(self):
        if self.kind not in ("none", "concrete", "template"):
            raise SynthError(f"unknown guard kind {self.kind!r}")
        if self.kind == "none" and self.parts:
            raise SynthError("guard 'none' takes no polynomials")
        if self.kind != "none" and not self.parts:
            raise SynthError(f"guard {self.kind!r} needs at least one polynomial")

    @staticmethod
    def none() -> "Guard":
        return Guard("none")

    @staticmethod
    def concrete(*polys: Polynomial) -> "Guard":
        prod = polys[0]
        for p in polys[1:]:
            prod = prod * p
        return Guard("concrete", (prod,))

    @staticmethod
    def template(*polys: Polynomial) -> "Guard":
        return Guard("template", tuple(polys))

    def concrete_poly(self, ctx: VarContext) -> Polynomial:
        """The guard as one polynomial over ctx (1 when absent)."""
        if self.kind == "none":
            return Polynomial.constant(ctx, 1)
        if self.kind == "concrete":
            p = self.parts[0]
            return p.cast(ctx) if p.ctx != ctx else p
        raise SynthError("a template guard has no concrete polynomial")

    def is_constant_nonzero(self) -> bool:
        """True when the guard can never stop the loop (identically ≠ 0)."""
        if self.kind == "none":
            return True
        if self.kind == "concrete":
            p = self.parts[0]
            return p.is_constant() and not p.is_zero()
        return False


@dataclass(frozen=True)
class LoopTemplate:
    """Per-branch, per-variable generator lists over the program context."""

    ctx: VarContext
    branches: tuple[tuple[tuple[Polynomial, ...], ...], ...]

    def __post_init__(self):
        if any(c != PROGRAM for c in self.ctx.classes):
            raise SynthError("template context must contain program variables only")
        if not self.branches:
            raise SynthError("a template needs at least one branch")
        n = len(self.ctx)
        for b, branch in enumerate(self.branches):
            if len(branch) != n:
                raise SynthError(
                    f"branch {b + 1} has {len(branch)} generator lists, expected {n}"
                )
            for gens in branch:
                for g in gens:
                    if g.ctx != self.ctx:
                        raise SynthError("generators must live over the template context")

    @staticmethod
    def make(
        ctx: VarContext, branches: Sequence[Sequence[Sequence[Polynomial]]]
    ) -> "LoopTemplate":
        return LoopTemplate(
            ctx,
            tuple(tuple(tuple(gens) for gens in branch) for branch in branches),
        )

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    def generator_count(self) -> int:
        return sum(len(g) for b in self.branches for g in b)

    def max_generator_degree(self) -> int:
        degs = [g.total_degree() for b in self.branches for gens in b for g in gens]
        return max(degs, default=0)

    def coefficient_names(self) -> tuple[tuple[tuple[str, ...], ...], ...]:
        """Fresh unknown names, shaped like the template.

        Single-branch templates use flat names y1, y2, … in (variable,
        generator) order; branching templates use y{i}_{j}_{l}.  Names are
        prefixed until they clash with no program variable.
        """
        taken = set(self.ctx.names)
        prefix = "y"
        while True:
            if self.branch_count == 1:
                seq = 0
                out_flat = []
                for gens in self.branches[0]:
                    row = []
                    for _ in gens:
                        seq += 1
                        row.append(f"{prefix}{seq}")
                    out_flat.append(tuple(row))
                names = (tuple(out_flat),)
            else:
                names = tuple(
                    tuple(
                        tuple(
                            f"{prefix}{i + 1}_{j + 1}_{l + 1}" for l in range(len(gens))
                        )
                        for j, gens in enumerate(branch)
                    )
                    for i, branch in enumerate(self.branches)
                )
            flat = [n for branch in names for row in branch for n in row]
            if not (set(flat) & taken):
                return names
            prefix = "c" + prefix


@dataclass(frozen=True)
class SynthesisProblem:
    template: LoopTemplate
    invariants: tuple[Polynomial, ...]
    guard: Guard = field(default_factory=Guard.none)
    initial: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if not self.invariants:
            raise SynthError("a synthesis problem needs at least one invariant")
        ctx = self.template.ctx
        for g in self.invariants:
            if g.ctx != ctx:
                raise SynthError("invariants must live over the template context")
        for p in self.guard.parts:
            if p.ctx != ctx:
                raise SynthError("guard polynomials must live over the template context")
        if self.initial is not None:
            if len(self.initial) != len(ctx):
                raise SynthError("initial state arity does not match the program variables")
            object.__setattr__(
                self, "initial", tuple(Fraction(v) for v in self.initial)
            )


@dataclass(frozen=True)
class EquationOrigin:
    """Where an equation came from: seed invariant, branch word, depth.

    ``word`` lists 0-based branch indices with the innermost (first
    applied) map first; ``round`` is the composition depth (len(word)).
    ``monomial`` is set by the coefficient-extraction route to record which
    program monomial the equation is the coefficient of.
    """

    invariant_index: int
    word: tuple[int, ...]
    round: int
    monomial: tuple | None = None


@dataclass(frozen=True)
class PolynomialSystem:
    """A finite equation system over unknown variables only.

    ``ctx`` contains the unknowns: coefficient unknowns (y), guard-template
    unknowns (w), and — when the problem left the initial state free — the
    retained initial-value unknowns (program class, renamed aⱼ).
    """

    ctx: VarContext
    equations: tuple[Polynomial, ...]
    origins: tuple[EquationOrigin, ...]
    branch_groups: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        for eq in self.equations:
            if eq.ctx != self.ctx:
                raise SynthError("system equations must live over the system context")
        if len(self.origins) != len(self.equations):
            raise SynthError("origins must align with equations")

    @property
    def unknowns(self) -> tuple[str, ...]:
        return self.ctx.names

    @property
    def coefficient_names(self) -> tuple[str, ...]:
        return tuple(
            n for n, c in zip(self.ctx.names, self.ctx.classes) if c == COEFFICIENT
        )

    @property
    def guard_names(self) -> tuple[str, ...]:
        return tuple(
            n for n, c in zip(self.ctx.names, self.ctx.classes) if c == GUARD_COEFF
        )

    @property
    def initial_names(self) -> tuple[str, ...]:
        return tuple(
            n for n, c in zip(self.ctx.names, self.ctx.classes) if c == PROGRAM
        )


@dataclass(frozen=True)
class ConcreteLoop:
    """A fully instantiated loop: initial state, guard, one map per branch.

    ``initial`` may be None for loops whose start state was never pinned
    down (identity-style checks don't need one); state-dependent checks
    reject such loops explicitly.
    """

    ctx: VarContext
    initial: tuple[Fraction, ...] | None
    guard: Polynomial
    maps: tuple[PolyMap, ...]

    def __post_init__(self):
        if self.initial is not None and len(self.initial) != len(self.ctx):
            raise SynthError("initial state arity does not match the program context")
        if self.guard.ctx != self.ctx:
            raise SynthError("guard must live over the program context")
        for f in self.maps:
            if f.ctx != self.ctx:
                raise SynthError("maps must live over the program context")

    @property
    def branch_count(self) -> int:
        return len(self.maps)

    def updates(self, branch: int) -> tuple[Polynomial, ...]:
        return self.maps[branch].program_components


@dataclass(frozen=True)
class ExtendedMaps:
    """The lifted self-maps H_i plus the bookkeeping to read them.

    ``ctx`` is the extended context: program variables, then coefficient
    unknowns, then the guard flag z, then guard-template unknowns.
    ``y_names`` is shaped like the template's branches.
    """

    maps: tuple[PolyMap, ...]
    ctx: VarContext
    y_names: tuple[tuple[tuple[str, ...], ...], ...]
    z_name: str
    w_names: tuple[str, ...]


def _fresh(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name = name + "_"
    return name


def build_extended_maps(problem: SynthesisProblem) -> ExtendedMaps:
    """Lift a synthesis problem's template into the extended space.

    One PolyMap per branch: program coordinates move by the unknown linear
    combinations of the generators, coefficient unknowns are fixed, the
    guard flag picks up one factor of the guard per application, and guard
    unknowns are fixed.
    """
    tmpl = problem.template
    prog = tmpl.ctx
    y_names = tmpl.coefficient_names()
    flat_y = [n for branch in y_names for row in branch for n in row]
    taken = set(prog.names) | set(flat_y)
    z_name = _fresh("z", taken)
    taken.add(z_name)
    w_names: tuple[str, ...] = ()
    if problem.guard.kind == "template":
        w_names = tuple(
            _fresh(f"w{q + 1}", taken) for q in range(len(problem.guard.parts))
        )
        taken.update(w_names)

    ctx = prog.extend(tuple(flat_y), COEFFICIENT)
    ctx = ctx.extend((z_name,), GUARD_FLAG)
    if w_names:
        ctx = ctx.extend(w_names, GUARD_COEFF)

    z_index = ctx.index(z_name)
    z_var = Polynomial.variable(ctx, z_index)
    if problem.guard.kind == "template":
        h = Polynomial.zero(ctx)
        for w_name, part in zip(w_names, problem.guard.parts):
            h = h + Polynomial.variable(ctx, w_name) * part.cast(ctx)
    else:
        h = problem.guard.concrete_poly(prog).cast(ctx)

    maps = []
    for i, branch in enumerate(tmpl.branches):
        updates = []
        for j, gens in enumerate(branch):
            comp = Polynomial.zero(ctx)
            for l, gen in enumerate(gens):
                comp = comp + Polynomial.variable(ctx, y_names[i][j][l]) * gen.cast(ctx)
            updates.append(comp)
        h_map = PolyMap.from_program_updates(ctx, updates)
        h_map = h_map.with_component(z_index, z_var * h)
        maps.append(h_map)
    return ExtendedMaps(tuple(maps), ctx, y_names, z_name, w_names)


def generate_loops(
    problem: SynthesisProblem,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    inter_reduce: bool = False,
    effort: int | None = DEFAULT_EFFORT,
) -> PolynomialSystem:
    """Run the invariant-set fixed point and project to unknown space.

    Returns the equation system whose solutions are exactly the coefficient
    (and guard / initial-state) choices that make every target polynomial
    an algebraic invariant of the instantiated loop.  Zero equations are
    dropped; with ``inter_reduce`` equations already implied (up to
    radical) by the remaining ones are dropped too — off by default so the
    raw generated shapes are preserved.

    ``effort`` caps the steps spent on any one membership proof during the
    fixed point (``None`` = unbounded).  An abandoned proof keeps its
    polynomial as an extra generator, which never changes the solution set
    of the returned system, only its presentation; the cap keeps symbolic
    coefficient rings with heavy non-membership certificates from stalling
    a round.  The final system is exact either way.
    """
    ext = build_extended_maps(problem)
    strip_z = problem.guard.is_constant_nonzero()

    if strip_z:
        # z is algebraically inert for never-stopping guards; drop it.
        keep = [i for i in range(len(ext.ctx)) if ext.ctx.names[i] != ext.z_name]
        work_ctx = ext.ctx.restrict(keep)
        maps = []
        for h_map in ext.maps:
            comps = [h_map.components[i] for i in keep]
            comps = [
                Polynomial(
                    work_ctx,
                    {
                        tuple(m[i] for i in keep): c
                        for m, c in comp.terms.items()
                    },
                )
                for comp in comps
            ]
            maps.append(PolyMap(work_ctx, comps))
        seeds = [g.cast(work_ctx) for g in problem.invariants]
    else:
        work_ctx = ext.ctx
        maps = list(ext.maps)
        z_var = Polynomial.variable(work_ctx, ext.z_name)
        seeds = [z_var * g.cast(work_ctx) for g in problem.invariants]

    result = invariant_set_branch(seeds, maps, max_rounds=max_rounds, effort=effort)

    bindings: dict[str, Fraction] = {}
    if not strip_z:
        bindings[ext.z_name] = Fraction(1)
    if problem.initial is not None:
        for name, value in zip(problem.template.ctx.names, problem.initial):
            bindings[name] = value

    projected = [q.substitute(bindings) for q in result.generators]

    # When the initial state stays unknown the program variables survive as
    # initial-value unknowns; rename them a1, a2, … for readability.
    sub_ctx = projected[0].ctx if projected else work_ctx
    if problem.initial is None:
        taken = set(sub_ctx.names)
        renames: dict[str, str] = {}
        for j, name in enumerate(problem.template.ctx.names):
            if name in sub_ctx.names:
                cand = f"a{j + 1}"
                while cand in taken:
                    cand = cand + "_"
                renames[name] = cand
                taken.add(cand)
        sys_ctx = sub_ctx.renamed(renames)
        projected = [p.rename_context(sys_ctx) for p in projected]
    else:
        sys_ctx = sub_ctx

    equations: list[Polynomial] = []
    origins: list[EquationOrigin] = []
    seen: set = set()
    for p, (seed_i, word) in zip(projected, result.origins):
        if p.is_zero():
            continue
        key = tuple(sorted(p.terms.items()))
        if key in seen:
            continue
        seen.add(key)
        equations.append(p)
        origins.append(EquationOrigin(seed_i, word, len(word)))

    if inter_reduce and len(equations) > 1:
        from .groebner import in_radical

        kept = list(range(len(equations)))
        i = 0
        while i < len(kept):
            others = [equations[k] for k in kept if k != kept[i]]
            if others and in_radical(equations[kept[i]], others):
                kept.pop(i)
            else:
                i += 1
        equations = [equations[k] for k in kept]
        origins = [origins[k] for k in kept]

    branch_groups = tuple(
        tuple(n for row in branch for n in row if n in sys_ctx.names)
        for branch in ext.y_names
    )
    return PolynomialSystem(sys_ctx, tuple(equations), tuple(origins), branch_groups)


def instantiate_loop(
    problem: SynthesisProblem, assignment: Mapping[str, Rat]
) -> ConcreteLoop:
    """Bake a solution vector into a concrete loop.

    ``assignment`` maps unknown names (coefficients y, guard unknowns w,
    and initial-value unknowns aⱼ when the problem left the start state
    free) to exact rationals.  Missing names raise.
    """
    tmpl = problem.template
    prog = tmpl.ctx
    y_names = tmpl.coefficient_names()

    def lookup(name: str) -> Fraction:
        if name not in assignment:
            raise SynthError(f"solution does not bind unknown {name!r}")
        return Fraction(assignment[name])

    maps = []
    for i, branch in enumerate(tmpl.branches):
        updates = []
        for j, gens in enumerate(branch):
            comp = Polynomial.zero(prog)
            for l, gen in enumerate(gens):
                comp = comp + gen * lookup(y_names[i][j][l])
            updates.append(comp)
        maps.append(PolyMap.from_program_updates(prog, updates))

    if problem.guard.kind == "template":
        w_names = build_extended_maps(problem).w_names
        guard = Polynomial.zero(prog)
        for w_name, part in zip(w_names, problem.guard.parts):
            guard = guard + part * lookup(w_name)
    else:
        guard = problem.guard.concrete_poly(prog)

    if problem.initial is not None:
        initial = problem.initial
    elif "a1" in assignment:
        initial = tuple(
            lookup(f"a{j + 1}") for j in range(len(prog))
        )
    else:
        initial = None  # start state never entered the unknowns
    return ConcreteLoop(prog, initial, guard, tuple(maps))
