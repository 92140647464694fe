"""Independent checks that a concrete loop satisfies its invariants.

Three oracles of increasing strength-cost tradeoff, each returning a
:class:`VerificationReport`:

* :func:`verify_universal` — the polynomial identity g∘F_i = g per branch;
  strongest possible property, one subtraction per pair.
* :func:`verify_invariants` — membership of the initial point in the loop's
  invariant set, computed through the guarded fixed-point chain; this is the
  exact statement "every reachable state satisfies every invariant".
* :func:`simulate_loop` — direct rational execution over enumerated branch
  words; the ground-truth semantics, feasible for bounded depth.

Every check is exact.  There is deliberately no tolerance parameter in this
module: rational arithmetic makes equality decidable, and a verifier that
answers "close enough" would defeat its purpose as the layer that catches
bad solver models.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .invariant import DEFAULT_EFFORT, DEFAULT_MAX_ROUNDS, invariant_set_branch
from .ring import GUARD_FLAG, PolyMap, Polynomial, compose
from .synth import ConcreteLoop, SynthError


@dataclass(frozen=True)
class FailureWitness:
    """Where a check failed: the branch word taken, the step index along
    it, the exact state reached, and which invariant broke there.

    ``word`` is empty and ``step`` is 0 for failures at the initial state.
    ``value`` is the nonzero number (or polynomial, for identity checks)
    the failing invariant evaluated to.
    """

    word: tuple[int, ...]
    step: int
    state: tuple[Fraction, ...]
    invariant_index: int
    value: object


@dataclass(frozen=True)
class VerificationReport:
    method: str  # "universal-identity" | "invariant-set-membership" | "simulation"
    passed: bool
    witness: FailureWitness | None = None
    seed: int | None = None  # set when simulation fell back to sampled words

    def __bool__(self) -> bool:
        return self.passed


def _as_program_polys(loop: ConcreteLoop, gs: Sequence[Polynomial] | Polynomial):
    if isinstance(gs, Polynomial):
        gs = [gs]
    if not gs:
        raise SynthError("need at least one invariant to verify")
    out = []
    for g in gs:
        if g.ctx != loop.ctx:
            raise SynthError("invariants must live over the loop's program context")
        out.append(g)
    return out


def verify_universal(
    loop: ConcreteLoop, gs: Sequence[Polynomial] | Polynomial
) -> VerificationReport:
    """Pass iff g∘F_i equals g as a polynomial for every invariant and branch.

    This is the universally-inductive property: it makes g(x) − g(a)
    invariant from *every* start point, so it neither looks at the initial
    state nor at the guard.  A failure carries the nonzero difference
    polynomial as its witness value.
    """
    gs = _as_program_polys(loop, gs)
    for i, g in enumerate(gs):
        for j, f in enumerate(loop.maps):
            diff = compose(g, f) - g
            if not diff.is_zero():
                return VerificationReport(
                    "universal-identity",
                    False,
                    FailureWitness((j,), 1, loop.initial, i, diff),
                )
    return VerificationReport("universal-identity", True)


def verify_invariants(
    loop: ConcreteLoop,
    gs: Sequence[Polynomial] | Polynomial,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    effort: int | None = DEFAULT_EFFORT,
) -> VerificationReport:
    """Pass iff the initial point lies in the loop's invariant set.

    Builds the guarded extensions G_i(x, z) = (F_i(x), z·h(x)) and runs the
    fixed-point chain on the seeds z·g.  The loop satisfies its invariants
    exactly when (a, 1) is a common zero of every returned generator.  For
    a guard that can never stop the loop (h a nonzero constant) the z
    coordinate is algebraically inert and the chain runs directly on g and
    F_i — same decisions, one variable fewer.

    Round-cap errors from a non-stabilizing chain propagate to the caller;
    they mean "undecided at this depth", not "fail".
    """
    gs = _as_program_polys(loop, gs)
    if loop.initial is None:
        raise SynthError("loop has no initial state; membership needs one")
    guard_never_stops = loop.guard.is_constant() and not loop.guard.is_zero()

    if guard_never_stops:
        ctx = loop.ctx
        seeds = list(gs)
        maps = list(loop.maps)
        point = loop.initial
    else:
        names = set(loop.ctx.names)
        z_name = "z"
        while z_name in names:
            z_name = z_name + "_"
        ctx = loop.ctx.extend((z_name,), GUARD_FLAG)
        z_index = ctx.index(z_name)
        z_var = Polynomial.variable(ctx, z_index)
        seeds = [z_var * g.cast(ctx) for g in gs]
        maps = []
        for f in loop.maps:
            lifted = PolyMap.from_program_updates(
                ctx, [comp.cast(ctx) for comp in f.program_components]
            )
            maps.append(
                lifted.with_component(z_index, z_var * loop.guard.cast(ctx))
            )
        point = loop.initial + (Fraction(1),)

    result = invariant_set_branch(seeds, maps, max_rounds=max_rounds, effort=effort)
    for q, (seed_i, word) in zip(result.generators, result.origins):
        value = q.evaluate(point)
        if value:
            return VerificationReport(
                "invariant-set-membership",
                False,
                FailureWitness(word, len(word), loop.initial, seed_i, value),
            )
    return VerificationReport("invariant-set-membership", True)


def simulate_loop(
    loop: ConcreteLoop,
    gs: Sequence[Polynomial] | Polynomial,
    steps: int = 8,
    word_limit: int = 256,
    seed: int = 0,
) -> VerificationReport:
    """Execute the loop exactly and check every reached state.

    Words of branch choices of length ``steps`` are enumerated exhaustively
    (in lexicographic order) when kˢ ≤ ``word_limit``; the execution of a
    word checks all its prefixes, so this covers every word of length up
    to ``steps``.  Beyond that bound, ``word_limit`` words are sampled with
    the given seed and the report records which seed was used.

    At each visited state every invariant must vanish; when the guard
    vanishes the word stops there (the loop exited), otherwise the next
    branch map in the word is applied.
    """
    gs = _as_program_polys(loop, gs)
    if loop.initial is None:
        raise SynthError("loop has no initial state; simulation needs one")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if word_limit < 1:
        raise ValueError("word_limit must be at least 1")

    k = loop.branch_count
    sampled: int | None = None
    if steps == 0 or k**steps <= word_limit:
        words = itertools.product(range(k), repeat=steps)
    else:
        rng = random.Random(seed)
        sampled = seed
        words = (
            tuple(rng.randrange(k) for _ in range(steps)) for _ in range(word_limit)
        )

    for word in words:
        state = loop.initial
        for step, branch in enumerate(word + (None,)):
            for i, g in enumerate(gs):
                if g.evaluate(state):
                    return VerificationReport(
                        "simulation",
                        False,
                        FailureWitness(
                            word[:step], step, state, i, g.evaluate(state)
                        ),
                        seed=sampled,
                    )
            if branch is None:
                break
            if not loop.guard.evaluate(state):
                break  # guard hit zero: the loop stopped along this word
            state = tuple(
                comp.evaluate(state) for comp in loop.maps[branch].program_components
            )
    return VerificationReport("simulation", True, seed=sampled)
