"""Fixed-point computation of algebraic invariant sets.

Given polynomials g₁,…,g_m and polynomial self-maps F₁,…,F_k, the target
object is the largest subset of the common zero set of the gᵢ that every
map keeps inside itself.  It is cut out by the (finitely many, by ideal
ascent) compositions gᵢ∘F_w over words w, and the loop below accumulates
exactly those compositions until one more round adds nothing new up to
radical membership:

    S ← {g₁,…,g_m};  layer ← S
    repeat: layer ← compositions of layer with every map
            if every layer member lies in √⟨S⟩: done — V(S) is the
            invariant set
            else S ← S ∪ layer

Note the whole layer is kept once any member escapes the radical, members
included.  Discarding the members would leave V(S) unchanged, but the
retained ones are precisely what keeps the next round's membership tests
cheap (one normal form against a richer ideal, instead of a certificate
search against a sparser one), and it makes the result's generator list
exactly the ≤ r-fold compositions.  Termination is the ascending chain
condition on the ideals ⟨S⟩.

The radical tests reuse one incrementally extended Gröbner basis of the
accumulated set rather than recomputing it from scratch each round.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .groebner import GREVLEX, MonomialOrder, RadicalTester
from .ring import ContextMismatchError, PolyMap, Polynomial, compose

DEFAULT_MAX_ROUNDS = 32

# Step cap per membership proof used by the synthesis pipeline.  Sized so
# every proof the worked goldens actually need completes with an order of
# magnitude to spare, while a degenerating non-membership certificate is
# abandoned within roughly a second.
DEFAULT_EFFORT = 100_000


@dataclass(frozen=True)
class InvariantSetResult:
    """Outcome of the fixed-point loop.

    generators: the accumulated polynomials whose common zero set is the
        invariant set — seed polynomials first, then each non-stabilizing
        round's compositions in order (zero polynomials dropped).
    origins: aligned with ``generators``; each entry is ``(seed_index,
        word)`` where ``word`` lists 0-based map indices, first-applied
        (innermost) symbol first.  Seeds carry the empty word.
    rounds: how many radical tests ran — i.e. how many composition layers
        were examined, counting the final accepting one.
    trace: the composed working sequence examined at each round, before
        any member was dropped.
    """

    generators: tuple[Polynomial, ...]
    origins: tuple[tuple[int, tuple[int, ...]], ...]
    rounds: int
    trace: tuple[tuple[Polynomial, ...], ...]


class RoundCapExceeded(RuntimeError):
    """The fixed point did not stabilize within the allowed rounds.

    Carries the partial result so callers can inspect how the chain was
    still growing when the cap hit.
    """

    def __init__(self, max_rounds: int, partial: InvariantSetResult):
        super().__init__(
            f"invariant-set chain did not stabilize within {max_rounds} rounds; "
            f"{len(partial.generators)} generators accumulated — the invariant "
            f"set may genuinely need more rounds (raise max_rounds) or the "
            f"chain may not terminate at this template degree"
        )
        self.max_rounds = max_rounds
        self.partial = partial


def _validated(gs: Sequence[Polynomial], maps: Sequence[PolyMap]):
    if not gs:
        raise ValueError("need at least one seed polynomial")
    if not maps:
        raise ValueError("need at least one map")
    ctx = maps[0].ctx
    for f in maps:
        if f.ctx != ctx:
            raise ContextMismatchError("all maps must share one context")
    gs = [g.cast(ctx) if g.ctx != ctx else g for g in gs]
    return gs, list(maps), ctx


def invariant_set_branch(
    gs: Sequence[Polynomial],
    maps: Sequence[PolyMap],
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    order: MonomialOrder = GREVLEX,
    effort: int | None = None,
) -> InvariantSetResult:
    """Fixed point over all finite words in k maps (k = 1 is the plain case).

    A round composes the previous working layer with every map and asks
    whether the whole new layer already lies in √⟨accumulated⟩.  If yes the
    fixed point is reached; if not, the **entire** layer joins the
    accumulated set (zero polynomials excepted) and iteration continues.
    Keeping proven members too is deliberate: they enlarge the ideal the
    next round reduces against, which is what keeps later membership
    proofs one normal form instead of a fresh basis completion, and it
    makes ``generators`` literally the set of all ≤ r-fold compositions.

    ``effort`` bounds the steps any single radical-membership proof may
    spend (see :meth:`RadicalTester.contains_radical`).  A proof abandoned
    at the bound counts as "not yet inside", which at worst delays the
    fixed point by a round — the zero set is unchanged — but keeps every
    round's cost linear in the bound instead of doubly exponential.
    """
    gs, maps, ctx = _validated(gs, maps)
    seed = [(g, (i, ())) for i, g in enumerate(gs) if not g.is_zero()]
    tester = RadicalTester(ctx, order)
    tester.add([g for g, _ in seed])
    generators = [g for g, _ in seed]
    origins = [o for _, o in seed]
    layer = list(seed)
    trace: list[tuple[Polynomial, ...]] = []
    rounds = 0
    while True:
        if rounds >= max_rounds:
            partial = InvariantSetResult(
                tuple(generators), tuple(origins), rounds, tuple(trace)
            )
            raise RoundCapExceeded(max_rounds, partial)
        composed: list[tuple[Polynomial, tuple[int, tuple[int, ...]]]] = []
        for j, f in enumerate(maps):
            cache: dict = {}
            for q, (seed_i, word) in layer:
                composed.append((compose(q, f, cache), (seed_i, (j,) + word)))
        rounds += 1
        trace.append(tuple(q for q, _ in composed))
        fresh = [(q, o) for q, o in composed if not q.is_zero()]
        if all(tester.contains_radical(q, effort=effort) for q, _ in fresh):
            return InvariantSetResult(
                tuple(generators), tuple(origins), rounds, tuple(trace)
            )
        tester.add([q for q, _ in fresh])
        generators.extend(q for q, _ in fresh)
        origins.extend(o for _, o in fresh)
        layer = fresh


def invariant_set(
    gs: Sequence[Polynomial] | Polynomial,
    fmap: PolyMap,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    order: MonomialOrder = GREVLEX,
    effort: int | None = None,
) -> InvariantSetResult:
    """Single-map invariant set: compositions g, g∘F, g∘F², … until stable."""
    if isinstance(gs, Polynomial):
        gs = [gs]
    return invariant_set_branch(
        gs, [fmap], max_rounds=max_rounds, order=order, effort=effort
    )
