"""Gröbner bases over the rationals, radical membership, dimension queries.

The public surface hands out reduced, monic, deterministically ordered
bases built from :class:`~loopforge.ring.Polynomial` values.  Internally
the engine works on integer-primitive term maps (denominators cleared,
content stripped) so the hot reduction loop runs on machine integers; the
exact rational view is reconstructed at the boundary.  Division remainders
are canonical: pseudo-reduction tracks the accumulated scalar multiplier
and divides it back out, which yields exactly the unique normal form the
monic basis would produce.

Buchberger's algorithm uses the normal selection strategy (smallest
s-pair lcm first) together with the product criterion (coprime leading
monomials) and the chain criterion.  A basis computation aborts early as
soon as a nonzero constant appears, which is what makes the Rabinowitsch
radical-membership queries cheap in the common accepting case.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .ring import (
    ContextMismatchError,
    Monomial,
    Polynomial,
    RingError,
    VarContext,
    grevlex_key,
    monomial_divides,
)

INFINITE = math.inf  # sentinel returned by solution_count for positive dimension


@dataclass(frozen=True)
class MonomialOrder:
    """grevlex, lex, or block (lex between two blocks, grevlex inside).

    ``front`` is the size of the leading block for ``block`` orders — the
    variables being eliminated come first in the context.
    """

    kind: str
    front: int = 0

    def __post_init__(self):
        if self.kind not in ("grevlex", "lex", "block"):
            raise ValueError(f"unknown monomial order {self.kind!r}")
        if self.kind == "block" and self.front <= 0:
            raise ValueError("block orders need a positive front-block size")

    def key(self, m: Monomial):
        """Sort key: key(a) < key(b) iff a < b in this order."""
        if self.kind == "grevlex":
            return grevlex_key(m)
        if self.kind == "lex":
            return m
        f = self.front
        return grevlex_key(m[:f]) + grevlex_key(m[f:])

    def extended(self) -> "MonomialOrder":
        """The same order on a context with one auxiliary variable appended.

        Appending a variable keeps existing comparisons intact for all three
        kinds (the new coordinate is zero in every old monomial and sits in
        the trailing block), which is what lets a known basis be reused as a
        warm start in the extended ring.
        """
        return self


GREVLEX = MonomialOrder("grevlex")
LEX = MonomialOrder("lex")


def block_order(front: int) -> MonomialOrder:
    return MonomialOrder("block", front)


class GroebnerError(RingError):
    pass


class NotZeroDimensionalError(GroebnerError):
    """Raised when a finite-solution operation meets a positive-dimensional ideal."""


# ---------------------------------------------------------------------------
# integer engine
# ---------------------------------------------------------------------------


class _GPoly:
    __slots__ = ("terms", "lm", "lc")

    def __init__(self, terms: dict, key):
        self.terms = terms
        self.lm = max(terms, key=key)
        self.lc = terms[self.lm]


class _BudgetExhausted(Exception):
    """Internal signal: a bounded computation ran out of steps."""


class _Budget:
    """Countdown over reduction work, deterministic across machines.

    One unit is charged per s-pair drawn from the queue; each reducer
    application charges one unit plus one per 64 bits of the coefficient
    it rewrites.  The bit surcharge matters: intermediate coefficient
    swell makes individual steps arbitrarily expensive, so a flat step
    count would let a degenerating run consume unbounded wall time before
    exhausting.  Tying the charge to operand size keeps budget consumption
    proportional to actual cost while depending only on the computation,
    not the clock.
    """

    __slots__ = ("remaining",)

    def __init__(self, steps: int):
        self.remaining = steps

    def charge(self, n: int = 1) -> None:
        self.remaining -= n
        if self.remaining < 0:
            raise _BudgetExhausted()


def _strip_content(terms: dict, key) -> dict:
    """Divide by integer content; normalize the leading coefficient positive."""
    if not terms:
        return terms
    g = 0
    for c in terms.values():
        g = math.gcd(g, c)
        if g == 1:
            break
    lm = max(terms, key=key)
    if terms[lm] < 0:
        g = -g
    if g != 1:
        terms = {m: c // g for m, c in terms.items()}
    return terms


def _int_terms(p: Polynomial) -> tuple[dict, int]:
    """Clear denominators: returns (T, d) with T = d * p and T integral."""
    d = 1
    for c in p.terms.values():
        d = math.lcm(d, c.denominator)
    return {m: c.numerator * (d // c.denominator) for m, c in p.terms.items()}, d


def _neg_key(k: tuple) -> tuple:
    return tuple(-v for v in k)


def _reduce_terms(
    terms: dict, basis: Sequence[_GPoly], key, budget: _Budget | None = None
) -> dict:
    """Fully reduce a term map modulo the basis, exactly over ℚ.

    Input coefficients may be ints or Fractions; the result maps monomials
    to nonzero Fractions and is the normal form of the input against the
    monic rescaling of the basis — no monomial of it is divisible by any
    basis leading monomial.

    Two choices keep long reductions from degenerating.  The pending
    monomials live in a max-heap (negated keys, lazy deletion), so picking
    the next head costs O(log) instead of a scan of the whole support.
    And each step divides only the head coefficient by the reducer's lead
    (rational, entry-local) rather than cross-scaling the entire
    intermediate polynomial the way integer pseudo-division does — the
    latter compounds a global multiplier that turns every later step into
    a big-integer sweep of the full support.
    """
    work = {m: Fraction(c) for m, c in terms.items() if c}
    heap = [(_neg_key(key(m)), m) for m in work]
    heapq.heapify(heap)
    out: dict = {}
    while heap:
        _, m = heapq.heappop(heap)
        c = work.pop(m, None)
        if c is None:
            continue  # stale entry: cancelled since it was pushed
        reducer = None
        for g in basis:
            if monomial_divides(g.lm, m):
                reducer = g
                break
        if reducer is None:
            out[m] = c
            continue
        if budget is not None:
            # Units scale with the size of the number being rewritten, so a
            # run whose coefficients swell burns its budget at the same rate
            # it burns wall time; the count stays machine-independent.
            budget.charge(1 + ((c.numerator.bit_length() + c.denominator.bit_length()) >> 6))
        f = c / reducer.lc
        q = tuple(a - b for a, b in zip(m, reducer.lm))
        rlm = reducer.lm
        for mg, cg in reducer.terms.items():
            if mg == rlm:
                continue
            mm = tuple(a + b for a, b in zip(q, mg))
            old = work.get(mm)
            v = (old - f * cg) if old is not None else -f * cg
            if v:
                work[mm] = v
                if old is None:
                    heapq.heappush(heap, (_neg_key(key(mm)), mm))
            else:
                del work[mm]
    return out


def _int_primitive(terms: dict, key) -> dict:
    """Clear denominators and strip content: the integer-primitive form."""
    if not terms:
        return {}
    den = 1
    for c in terms.values():
        den = math.lcm(den, c.denominator)
    ints = {m: int(c * den) for m, c in terms.items()}
    return _strip_content(ints, key)


def _spoly(gi: _GPoly, gj: _GPoly) -> dict:
    l = tuple(max(a, b) for a, b in zip(gi.lm, gj.lm))
    a = tuple(x - y for x, y in zip(l, gi.lm))
    b = tuple(x - y for x, y in zip(l, gj.lm))
    d = math.gcd(gi.lc, gj.lc)
    ci = gj.lc // d
    cj = gi.lc // d
    sp: dict = {}
    for mg, cg in gi.terms.items():
        mm = tuple(x + y for x, y in zip(a, mg))
        sp[mm] = ci * cg
    for mg, cg in gj.terms.items():
        mm = tuple(x + y for x, y in zip(b, mg))
        v = sp.get(mm, 0) - cj * cg
        if v:
            sp[mm] = v
        else:
            sp.pop(mm, None)
    return sp


def _engine(
    seed: Sequence[_GPoly],
    new: Sequence[dict],
    key,
    budget: _Budget | None = None,
) -> list[_GPoly]:
    """Extend a known basis (possibly empty) with new generators.

    ``seed`` must already be a Gröbner basis with respect to ``key`` —
    s-pairs internal to it are skipped.  Returns an unreduced basis; a
    single constant generator signals the unit ideal (early exit).
    """
    basis: list[_GPoly] = list(seed)
    pending: set[tuple[int, int]] = set()
    heap: list = []

    def consider(i: int, j: int) -> None:
        gi, gj = basis[i], basis[j]
        if all(a == 0 or b == 0 for a, b in zip(gi.lm, gj.lm)):
            return  # product criterion: coprime leads reduce to zero
        l = tuple(max(a, b) for a, b in zip(gi.lm, gj.lm))
        pending.add((i, j))
        heapq.heappush(heap, (sum(l), key(l), i, j))

    unit = False

    def add_element(terms: dict) -> None:
        nonlocal unit
        g = _GPoly(terms, key)
        if not any(g.lm):
            unit = True
            return
        idx = len(basis)
        basis.append(g)
        for i in range(idx):
            consider(i, idx)

    for terms in new:
        r = _int_primitive(_reduce_terms(terms, basis, key, budget), key)
        if r:
            add_element(r)
            if unit:
                return _unit_basis(r, key)
    while heap and not unit:
        _, _, i, j = heapq.heappop(heap)
        if (i, j) not in pending:
            continue
        pending.discard((i, j))
        if budget is not None:
            budget.charge()
        gi, gj = basis[i], basis[j]
        l = tuple(max(a, b) for a, b in zip(gi.lm, gj.lm))
        skipped = False
        for k in range(len(basis)):
            if k == i or k == j:
                continue
            if (
                monomial_divides(basis[k].lm, l)
                and (min(i, k), max(i, k)) not in pending
                and (min(j, k), max(j, k)) not in pending
            ):
                skipped = True  # chain criterion
                break
        if skipped:
            continue
        r = _int_primitive(_reduce_terms(_spoly(gi, gj), basis, key, budget), key)
        if r:
            add_element(r)
    if unit:
        n = len(basis[0].lm) if basis else 0
        return [_GPoly({(0,) * n: 1}, key)]
    return basis


def _unit_basis(sample_terms: dict, key) -> list[_GPoly]:
    n = len(next(iter(sample_terms)))
    return [_GPoly({(0,) * n: 1}, key)]


def _finalize(basis: Sequence[_GPoly], key) -> list[_GPoly]:
    """Minimalize and inter-reduce: the canonical reduced basis (integer form)."""
    if not basis:
        return []
    for g in basis:
        if not any(g.lm):
            return _unit_basis(g.terms, key)
    ordered = sorted(basis, key=lambda g: key(g.lm))
    minimal: list[_GPoly] = []
    for g in ordered:
        if not any(monomial_divides(h.lm, g.lm) for h in minimal):
            minimal.append(g)
    reduced: list[_GPoly] = []
    for i, g in enumerate(minimal):
        others = [h for j, h in enumerate(minimal) if j != i]
        r = _reduce_terms(g.terms, others, key)
        reduced.append(_GPoly(_int_primitive(r, key), key))
    reduced.sort(key=lambda g: key(g.lm))
    return reduced


# ---------------------------------------------------------------------------
# public surface
# ---------------------------------------------------------------------------


class GroebnerBasis:
    """A reduced Gröbner basis: monic generators, deterministic order.

    Equal ideals under equal monomial orders produce identical bases, no
    matter how the computation was staged — reduced bases are canonical.
    """

    __slots__ = ("ctx", "order", "gens", "_gpolys")

    def __init__(self, ctx: VarContext, order: MonomialOrder, gpolys: list[_GPoly]):
        self.ctx = ctx
        self.order = order
        self._gpolys = gpolys
        gens = []
        for g in gpolys:
            lc = g.terms[g.lm]
            gens.append(Polynomial(ctx, {m: Fraction(c, lc) for m, c in g.terms.items()}))
        self.gens = tuple(gens)

    def __iter__(self):
        return iter(self.gens)

    def __len__(self) -> int:
        return len(self.gens)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GroebnerBasis)
            and self.ctx == other.ctx
            and self.order == other.order
            and self.gens == other.gens
        )

    __hash__ = None

    def is_unit_ideal(self) -> bool:
        return any(g.is_constant() and not g.is_zero() for g in self.gens)

    def leading_monomials(self) -> tuple[Monomial, ...]:
        return tuple(g.lm for g in self._gpolys)

    def normal_form(self, p: Polynomial) -> Polynomial:
        return normal_form(p, self)

    def contains(self, p: Polynomial) -> bool:
        return normal_form(p, self).is_zero()


def buchberger(
    gens: Iterable[Polynomial],
    order: MonomialOrder = GREVLEX,
    ctx: VarContext | None = None,
) -> GroebnerBasis:
    """Reduced Gröbner basis of the ideal generated by ``gens``."""
    gens = [g for g in gens]
    for g in gens:
        if ctx is None:
            ctx = g.ctx
        elif g.ctx != ctx:
            raise ContextMismatchError("generators live over different contexts")
    if ctx is None:
        raise GroebnerError("an empty generator list needs an explicit context")
    key = order.key
    ints = [_strip_content(_int_terms(g)[0], key) for g in gens if not g.is_zero()]
    raw = _engine([], ints, key)
    return GroebnerBasis(ctx, order, _finalize(raw, key))


def normal_form(p: Polynomial, basis: GroebnerBasis) -> Polynomial:
    """The canonical remainder of ``p`` on division by the basis."""
    if p.ctx != basis.ctx:
        raise ContextMismatchError("polynomial and basis contexts differ")
    if p.is_zero():
        return p
    out = _reduce_terms(p.terms, basis._gpolys, basis.order.key)
    return Polynomial(p.ctx, out)


class RadicalTester:
    """Radical membership against a growing generator set.

    Maintains the reduced basis of the accumulated ideal incrementally and
    answers per-polynomial queries with the Rabinowitsch construction: ``p``
    lies in the radical iff the ideal extended by ``1 − t·p`` (fresh ``t``
    appended last in the order) is the unit ideal.  A plain ideal-membership
    division is tried first, since it is one reduction and settles the
    common case.
    """

    def __init__(self, ctx: VarContext, order: MonomialOrder = GREVLEX):
        self.ctx = ctx
        self.order = order
        self._key = order.key
        self._basis: list[_GPoly] = []

    @property
    def generators(self) -> tuple[Polynomial, ...]:
        return GroebnerBasis(self.ctx, self.order, list(self._basis)).gens

    def add(self, polys: Iterable[Polynomial]) -> None:
        ints = []
        for p in polys:
            if p.ctx != self.ctx:
                raise ContextMismatchError("generator context mismatch")
            if not p.is_zero():
                ints.append(_strip_content(_int_terms(p)[0], self._key))
        if not ints:
            return
        raw = _engine(self._basis, ints, self._key)
        self._basis = _finalize(raw, self._key)

    def basis(self) -> GroebnerBasis:
        return GroebnerBasis(self.ctx, self.order, list(self._basis))

    def contains_ideal(self, p: Polynomial) -> bool:
        if p.is_zero():
            return True
        if not self._basis:
            return False
        return not _reduce_terms(p.terms, self._basis, self._key)

    def contains_radical(self, p: Polynomial, effort: int | None = None) -> bool:
        """Radical membership; ``effort`` bounds the work spent on a proof.

        With ``effort=None`` the answer is exact.  With a step bound, a
        ``True`` is still always a completed membership proof, but ``False``
        may also mean "no proof found within the budget".  Callers that
        only use ``False`` to keep an element (rather than to certify
        non-membership) stay correct either way, since keeping a member is
        harmless — it just leaves a redundant generator behind.
        """
        if p.is_zero():
            return True
        if self._basis and not any(self._basis[0].lm) and len(self._basis) == 1:
            return True  # unit ideal: everything is a member
        budget = None if effort is None else _Budget(effort)
        try:
            if not _reduce_terms(p.terms, self._basis, self._key, budget):
                return True
            # Rabinowitsch: extend every monomial with a trailing t coordinate.
            key = self._key
            ext_basis = [
                _GPoly({m + (0,): c for m, c in g.terms.items()}, key)
                for g in self._basis
            ]
            n = len(self.ctx)
            p_terms, _ = _int_terms(p)
            witness = {m + (1,): -c for m, c in p_terms.items()}
            one = (0,) * (n + 1)
            witness[one] = witness.get(one, 0) + 1
            raw = _engine(ext_basis, [_strip_content(witness, key)], key, budget)
            return any(not any(g.lm) for g in raw)
        except _BudgetExhausted:
            return False


def in_radical(
    polys: Sequence[Polynomial] | Polynomial,
    gens: Sequence[Polynomial],
    order: MonomialOrder = GREVLEX,
) -> bool:
    """True iff every given polynomial lies in the radical of ⟨gens⟩."""
    if isinstance(polys, Polynomial):
        polys = [polys]
    if not polys:
        return True
    ctx = polys[0].ctx
    tester = RadicalTester(ctx, order)
    tester.add(gens)
    return all(tester.contains_radical(p) for p in polys)


def is_zero_dimensional(basis: GroebnerBasis) -> bool:
    """True iff the solution set (over the algebraic closure) is finite.

    Criterion: for every context variable, some leading monomial of the
    basis is a pure power of that variable.  The unit ideal (empty variety)
    counts as zero-dimensional.
    """
    if basis.is_unit_ideal():
        return True
    if not basis.gens:
        return len(basis.ctx) == 0
    lms = basis.leading_monomials()
    n = len(basis.ctx)
    for i in range(n):
        if not any(m[i] and sum(m) == m[i] for m in lms):
            return False
    return True


def solution_count(basis: GroebnerBasis):
    """Number of solutions counted with multiplicity, or ``INFINITE``.

    For a zero-dimensional ideal this is the dimension of the quotient ring
    as a vector space: the number of standard monomials (monomials divisible
    by no basis leading monomial).
    """
    if basis.is_unit_ideal():
        return 0
    if not is_zero_dimensional(basis):
        return INFINITE
    lms = basis.leading_monomials()
    n = len(basis.ctx)
    if n == 0:
        return 1
    bounds = []
    for i in range(n):
        bounds.append(min(m[i] for m in lms if m[i] and sum(m) == m[i]))
    # The standard monomials live inside the box Π [0, bounds_i); walking it
    # exhaustively is fine at the scales this package targets.
    import itertools

    count = 0
    for exps in itertools.product(*(range(b) for b in bounds)):
        if not any(monomial_divides(m, exps) for m in lms):
            count += 1
    return count


def elimination_ideal(
    gens: Sequence[Polynomial],
    keep_last_k: int,
    order_kind: str = "block",
) -> list[Polynomial]:
    """Generators of the elimination ideal retaining only the last k variables.

    Computes a basis under an elimination order (block by default, pure lex
    on request) and keeps the generators free of the eliminated variables,
    re-expressed over the restricted context.
    """
    if not gens:
        return []
    ctx = gens[0].ctx
    n = len(ctx)
    if not 0 <= keep_last_k <= n:
        raise GroebnerError(f"keep_last_k must be in [0, {n}]")
    front = n - keep_last_k
    if front == 0:
        return list(buchberger(gens, GREVLEX).gens)
    order = block_order(front) if order_kind == "block" else LEX
    basis = buchberger(gens, order)
    kept_ctx = ctx.restrict(range(front, n))
    out = []
    for g in basis.gens:
        if any(any(m[:front]) for m in g.terms):
            lm = max(g.terms, key=order.key)
            if not any(lm[:front]):
                raise GroebnerError("elimination order violated; this is a bug")
            continue
        out.append(Polynomial(kept_ctx, {m[front:]: c for m, c in g.terms.items()}))
    return out
