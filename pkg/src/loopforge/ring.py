"""Exact sparse multivariate polynomial arithmetic over the rationals.

Everything downstream (basis computation, fixed points, constraint
generation, verification) is built on the two value types defined here:

* :class:`VarContext` — an ordered tuple of distinct variable names, each
  tagged with a class (``program``, ``coefficient``, ``guard-flag``,
  ``guard-coeff``, ``auxiliary``).  The class tags exist so that map
  composition and coefficient extraction never silently substitute or
  collect the wrong kind of variable.
* :class:`Polynomial` — a term map from monomials to nonzero rational
  coefficients.  Monomials are dense exponent tuples aligned with the
  context's variable order; a sparse no-zero-exponent view is available
  through :func:`monomial_items`.  Coefficients are ``fractions.Fraction``
  values, i.e. exact, lowest terms, positive denominator.  No floating
  point exists anywhere in this package's arithmetic.

Zero coefficients are dropped eagerly, so two polynomials are equal as
functions iff their term maps are equal — the zero polynomial is the empty
map.  Cross-context arithmetic is rejected rather than coerced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

Rat = Union[Fraction, int]

# Variable classes.
PROGRAM = "program"
COEFFICIENT = "coefficient"
GUARD_FLAG = "guard-flag"
GUARD_COEFF = "guard-coeff"
AUXILIARY = "auxiliary"

VAR_CLASSES = (PROGRAM, COEFFICIENT, GUARD_FLAG, GUARD_COEFF, AUXILIARY)


class RingError(ValueError):
    """Base class for errors raised by this module."""


class ContextMismatchError(RingError):
    """Arithmetic attempted between polynomials over different contexts."""


class UnknownVariableError(RingError):
    """A variable name not present in the context was referenced."""


class PolyParseError(RingError):
    """Syntax error in polynomial text; carries the offending position."""

    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


def _as_fraction(value: Rat) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


@dataclass(frozen=True)
class VarContext:
    """Ordered, distinct variable names with class tags."""

    names: tuple[str, ...]
    classes: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        if len(self.names) != len(self.classes):
            raise RingError("names and classes must have equal length")
        if len(set(self.names)) != len(self.names):
            raise RingError(f"duplicate variable names: {self.names}")
        for name in self.names:
            if not _VAR_RE.fullmatch(name):
                raise RingError(f"invalid variable name: {name!r}")
        for cls in self.classes:
            if cls not in VAR_CLASSES:
                raise RingError(f"unknown variable class: {cls!r}")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    @staticmethod
    def make(names: Sequence[str], classes: Sequence[str] | str = PROGRAM) -> "VarContext":
        """Build a context; a single class string applies to every name."""
        names = tuple(names)
        if isinstance(classes, str):
            classes = (classes,) * len(names)
        return VarContext(names, tuple(classes))

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariableError(
                f"unknown variable {name!r} (context has {', '.join(self.names)})"
            ) from None

    def var_class(self, i: int) -> str:
        return self.classes[i]

    def indices_of_class(self, cls: str) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.classes) if c == cls)

    @property
    def program_indices(self) -> tuple[int, ...]:
        return self.indices_of_class(PROGRAM)

    def restrict(self, keep: Sequence[int]) -> "VarContext":
        """Context containing only the given variable positions, order kept."""
        keep = tuple(keep)
        return VarContext(
            tuple(self.names[i] for i in keep),
            tuple(self.classes[i] for i in keep),
        )

    def extend(self, names: Sequence[str], classes: Sequence[str] | str) -> "VarContext":
        """New context with extra variables appended after the existing ones."""
        names = tuple(names)
        if isinstance(classes, str):
            classes = (classes,) * len(names)
        return VarContext(self.names + names, self.classes + tuple(classes))

    def renamed(self, mapping: Mapping[str, str]) -> "VarContext":
        return VarContext(
            tuple(mapping.get(n, n) for n in self.names), self.classes
        )


_VAR_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")

Monomial = tuple  # dense exponent tuple aligned with a VarContext


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def monomial_degree(m: Monomial) -> int:
    return sum(m)


def monomial_divides(a: Monomial, b: Monomial) -> bool:
    """True iff monomial a divides monomial b."""
    return all(x <= y for x, y in zip(a, b))


def monomial_div(a: Monomial, b: Monomial) -> Monomial:
    """a / b, assuming divisibility."""
    return tuple(x - y for x, y in zip(a, b))


def monomial_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


def monomial_items(m: Monomial) -> tuple[tuple[int, int], ...]:
    """Sparse view: (variable index, exponent) pairs, zero exponents omitted."""
    return tuple((i, e) for i, e in enumerate(m) if e)


def grevlex_key(m: Monomial):
    """Sort key realizing graded reverse lexicographic order (ascending)."""
    return (sum(m),) + tuple(-e for e in reversed(m))


class Polynomial:
    """Immutable-by-convention sparse polynomial over a fixed context.

    ``terms`` maps exponent tuples to nonzero Fractions.  Construction
    canonicalizes: zero coefficients are removed, values coerced to
    Fraction.  Do not mutate ``terms`` after construction.
    """

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: VarContext, terms: Mapping[Monomial, Rat]):
        clean: dict[Monomial, Fraction] = {}
        n = len(ctx)
        for m, c in terms.items():
            c = _as_fraction(c)
            if not c:
                continue
            if len(m) != n:
                raise RingError(f"monomial {m} has wrong arity for context {ctx.names}")
            clean[m] = c
        self.ctx = ctx
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(ctx: VarContext) -> "Polynomial":
        return Polynomial(ctx, {})

    @staticmethod
    def constant(ctx: VarContext, value: Rat) -> "Polynomial":
        return Polynomial(ctx, {(0,) * len(ctx): _as_fraction(value)})

    @staticmethod
    def variable(ctx: VarContext, name_or_index: str | int) -> "Polynomial":
        i = name_or_index if isinstance(name_or_index, int) else ctx.index(name_or_index)
        m = tuple(1 if j == i else 0 for j in range(len(ctx)))
        return Polynomial(ctx, {m: Fraction(1)})

    @staticmethod
    def from_items(ctx: VarContext, items: Iterable[tuple[Monomial, Rat]]) -> "Polynomial":
        acc: dict[Monomial, Fraction] = {}
        for m, c in items:
            acc[m] = acc.get(m, Fraction(0)) + _as_fraction(c)
        return Polynomial(ctx, acc)

    # -- predicates / queries ----------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise RingError("polynomial is not constant")
        return next(iter(self.terms.values()), Fraction(0))

    def total_degree(self) -> int:
        """Total degree; the zero polynomial reports -1."""
        if not self.terms:
            return -1
        return max(sum(m) for m in self.terms)

    def degree_in(self, indices: Sequence[int]) -> int:
        if not self.terms:
            return -1
        idx = tuple(indices)
        return max(sum(m[i] for i in idx) for m in self.terms)

    def variables_used(self) -> tuple[int, ...]:
        used = set()
        for m in self.terms:
            for i, e in enumerate(m):
                if e:
                    used.add(i)
        return tuple(sorted(used))

    def leading_monomial(self) -> Monomial:
        """Largest monomial under grevlex (raises on zero)."""
        if not self.terms:
            raise RingError("zero polynomial has no leading monomial")
        return max(self.terms, key=grevlex_key)

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in descending grevlex order (canonical iteration order)."""
        return sorted(self.terms.items(), key=lambda t: grevlex_key(t[0]), reverse=True)

    # -- arithmetic ----------------------------------------------------------

    def _check(self, other: "Polynomial") -> None:
        if self.ctx != other.ctx:
            raise ContextMismatchError(
                f"operands live over different contexts: "
                f"{self.ctx.names} vs {other.ctx.names}"
            )

    def __add__(self, other: "Polynomial | Rat") -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.ctx, other)
        self._check(other)
        acc = dict(self.terms)
        for m, c in other.terms.items():
            v = acc.get(m, Fraction(0)) + c
            if v:
                acc[m] = v
            else:
                acc.pop(m, None)
        out = Polynomial.__new__(Polynomial)
        out.ctx = self.ctx
        out.terms = acc
        return out

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        out = Polynomial.__new__(Polynomial)
        out.ctx = self.ctx
        out.terms = {m: -c for m, c in self.terms.items()}
        return out

    def __sub__(self, other: "Polynomial | Rat") -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.ctx, other)
        return self + (-other)

    def __rsub__(self, other: Rat) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other: "Polynomial | Rat") -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            if not c:
                return Polynomial.zero(self.ctx)
            out = Polynomial.__new__(Polynomial)
            out.ctx = self.ctx
            out.terms = {m: v * c for m, v in self.terms.items()}
            return out
        self._check(other)
        acc: dict[Monomial, Fraction] = {}
        # iterate over the smaller operand's terms in the outer loop
        a, b = self.terms, other.terms
        if len(a) > len(b):
            a, b = b, a
        for ma, ca in a.items():
            for mb, cb in b.items():
                m = tuple(x + y for x, y in zip(ma, mb))
                v = acc.get(m)
                if v is None:
                    acc[m] = ca * cb
                else:
                    v = v + ca * cb
                    if v:
                        acc[m] = v
                    else:
                        del acc[m]
        out = Polynomial.__new__(Polynomial)
        out.ctx = self.ctx
        out.terms = acc
        return out

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "Polynomial":
        if not isinstance(e, int) or e < 0:
            raise RingError("polynomial powers take nonnegative integer exponents")
        result = Polynomial.constant(self.ctx, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base_needed = e > 1
            e >>= 1
            if base_needed and e:
                base = base * base
        return result

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.ctx == other.ctx
            and self.terms == other.terms
        )

    __hash__ = None  # term maps are mutable dicts; polynomials are not hashable

    # -- evaluation / substitution -----------------------------------------

    def evaluate(self, values: Sequence[Rat]) -> Fraction:
        """Evaluate at a full point (one value per context variable)."""
        if len(values) != len(self.ctx):
            raise RingError("evaluation point arity does not match context")
        vals = [_as_fraction(v) for v in values]
        total = Fraction(0)
        for m, c in self.terms.items():
            prod = c
            for i, e in enumerate(m):
                if e:
                    prod *= vals[i] ** e
            total += prod
        return total

    def substitute(self, bindings: Mapping[str, Rat]) -> "Polynomial":
        """Partial evaluation.

        The result lives in a context restricted to the unbound variables
        (order and class tags preserved).  Binding every variable yields a
        constant polynomial over the empty context.
        """
        ctx = self.ctx
        bound: dict[int, Fraction] = {}
        for name, v in bindings.items():
            bound[ctx.index(name)] = _as_fraction(v)
        keep = [i for i in range(len(ctx)) if i not in bound]
        new_ctx = ctx.restrict(keep)
        pos = {old: new for new, old in enumerate(keep)}
        acc: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            coeff = c
            new_m = [0] * len(keep)
            for i, e in enumerate(m):
                if not e:
                    continue
                if i in bound:
                    coeff *= bound[i] ** e
                    if not coeff:
                        break
                else:
                    new_m[pos[i]] = e
            if not coeff:
                continue
            key = tuple(new_m)
            v = acc.get(key, Fraction(0)) + coeff
            if v:
                acc[key] = v
            else:
                acc.pop(key, None)
        out = Polynomial.__new__(Polynomial)
        out.ctx = new_ctx
        out.terms = acc
        return out

    def rename_context(self, new_ctx: VarContext) -> "Polynomial":
        """Same exponent data over a positionally identical context."""
        if len(new_ctx) != len(self.ctx):
            raise ContextMismatchError("renamed context must have the same arity")
        out = Polynomial.__new__(Polynomial)
        out.ctx = new_ctx
        out.terms = dict(self.terms)
        return out

    def cast(self, target: VarContext) -> "Polynomial":
        """Re-express over a context containing the variables actually used.

        Variables of the source context missing from the target are allowed
        as long as the polynomial never uses them with a nonzero exponent.
        """
        mapping = []
        for n_ in self.ctx.names:
            try:
                mapping.append(target.index(n_))
            except UnknownVariableError:
                mapping.append(None)
        n = len(target)
        acc: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            new_m = [0] * n
            for i, e in enumerate(m):
                if e:
                    if mapping[i] is None:
                        raise UnknownVariableError(
                            f"cannot cast: variable {self.ctx.names[i]!r} is "
                            f"used but absent from the target context"
                        )
                    new_m[mapping[i]] = e
            acc[tuple(new_m)] = c
        out = Polynomial.__new__(Polynomial)
        out.ctx = target
        out.terms = acc
        return out

    # -- structure ----------------------------------------------------------

    def coefficients_wrt(self, indices: Sequence[int]) -> list[tuple[Monomial, "Polynomial"]]:
        """View the polynomial in the given variables.

        Returns ``(monomial, coefficient)`` pairs where the monomial ranges
        over the selected variables (full-arity tuple, zeros elsewhere) and
        the coefficient is a polynomial in the remaining variables.  Pairs
        are ordered by descending grevlex on the selected-variable monomial,
        which makes downstream equation generation deterministic.
        """
        idx = set(indices)
        buckets: dict[Monomial, dict[Monomial, Fraction]] = {}
        for m, c in self.terms.items():
            sel = tuple(e if i in idx else 0 for i, e in enumerate(m))
            rest = tuple(0 if i in idx else e for i, e in enumerate(m))
            buckets.setdefault(sel, {})[rest] = c
        out = []
        for sel in sorted(buckets, key=grevlex_key, reverse=True):
            out.append((sel, Polynomial(self.ctx, buckets[sel])))
        return out

    def content(self) -> Fraction:
        """Positive rational c with self/c integer-primitive (0 for zero)."""
        if not self.terms:
            return Fraction(0)
        from math import gcd, lcm

        den = 1
        for c in self.terms.values():
            den = lcm(den, c.denominator)
        num = 0
        for c in self.terms.values():
            num = gcd(num, abs(c.numerator * (den // c.denominator)))
        return Fraction(num, den)

    def primitive_normalized(self) -> "Polynomial":
        """Scalar-canonical form: integer-primitive, positive leading coeff."""
        if not self.terms:
            return self
        c = self.content()
        lead = self.terms[self.leading_monomial()]
        if lead < 0:
            c = -c
        return self * (1 / c)

    def monic(self) -> "Polynomial":
        if not self.terms:
            return self
        return self * (1 / self.terms[self.leading_monomial()])

    # -- text ----------------------------------------------------------------

    def __str__(self) -> str:
        return poly_to_text(self)

    def __repr__(self) -> str:
        return f"Polynomial({poly_to_text(self)!r})"


class PolyMap:
    """A polynomial self-map of a context's affine space.

    ``components`` holds one polynomial per context variable; variables the
    map leaves alone carry their own variable polynomial.  The public
    constructor :meth:`from_program_updates` builds the common case — one
    update per *program-class* variable, everything else fixed — while the
    loop-extension machinery also installs a component on the guard-flag
    coordinate.  Composition substitutes exactly the non-identity
    components, so coefficient variables are never rewritten.
    """

    __slots__ = ("ctx", "components", "_moving")

    def __init__(self, ctx: VarContext, components: Sequence[Polynomial]):
        components = tuple(components)
        if len(components) != len(ctx):
            raise RingError("a PolyMap needs one component per context variable")
        for comp in components:
            if comp.ctx != ctx:
                raise ContextMismatchError("map components must live over the map context")
        self.ctx = ctx
        self.components = components
        moving = {}
        for i, comp in enumerate(components):
            var_m = tuple(1 if j == i else 0 for j in range(len(ctx)))
            if comp.terms != {var_m: Fraction(1)}:
                moving[i] = comp
        self._moving = moving

    @staticmethod
    def identity(ctx: VarContext) -> "PolyMap":
        return PolyMap(ctx, [Polynomial.variable(ctx, i) for i in range(len(ctx))])

    @staticmethod
    def from_program_updates(ctx: VarContext, updates: Sequence[Polynomial]) -> "PolyMap":
        prog = ctx.program_indices
        if len(updates) != len(prog):
            raise RingError(
                f"expected {len(prog)} updates (one per program variable), got {len(updates)}"
            )
        comps = [Polynomial.variable(ctx, i) for i in range(len(ctx))]
        for i, upd in zip(prog, updates):
            if upd.ctx != ctx:
                upd = upd.cast(ctx)
            comps[i] = upd
        return PolyMap(ctx, comps)

    def with_component(self, index: int, poly: Polynomial) -> "PolyMap":
        comps = list(self.components)
        comps[index] = poly
        return PolyMap(self.ctx, comps)

    @property
    def program_components(self) -> tuple[Polynomial, ...]:
        return tuple(self.components[i] for i in self.ctx.program_indices)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, PolyMap)
            and self.ctx == other.ctx
            and self.components == other.components
        )

    __hash__ = None

    def apply_point(self, values: Sequence[Rat]) -> tuple[Fraction, ...]:
        vals = [_as_fraction(v) for v in values]
        return tuple(comp.evaluate(vals) for comp in self.components)

    def __repr__(self) -> str:
        body = ", ".join(
            f"{self.ctx.names[i]} -> {comp}" for i, comp in sorted(self._moving.items())
        )
        return f"PolyMap({body or 'identity'})"


def compose(g: Polynomial, fmap: PolyMap, _cache: dict | None = None) -> Polynomial:
    """g ∘ F: substitute F's moving components into g.

    Only variables with non-identity components are substituted; all other
    variables (coefficient unknowns in particular) pass through untouched.
    """
    if g.ctx != fmap.ctx:
        raise ContextMismatchError("compose requires the polynomial and map to share a context")
    moving = fmap._moving
    if not moving:
        return g
    cache: dict[tuple[int, int], Polynomial] = _cache if _cache is not None else {}

    def power(i: int, e: int) -> Polynomial:
        key = (i, e)
        got = cache.get(key)
        if got is not None:
            return got
        if e == 1:
            p = moving[i]
        else:
            half = power(i, e // 2)
            p = half * half
            if e & 1:
                p = p * moving[i]
        cache[key] = p
        return p

    ctx = g.ctx
    acc = Polynomial.zero(ctx)
    one = Polynomial.constant(ctx, 1)
    for m, c in g.terms.items():
        fixed = tuple(0 if i in moving else e for i, e in enumerate(m))
        term = Polynomial(ctx, {fixed: c})
        for i, e in enumerate(m):
            if e and i in moving:
                term = term * power(i, e)
        acc = acc + term
    return acc


def compose_seq(gs: Sequence[Polynomial], fmap: PolyMap) -> list[Polynomial]:
    """Compose a sequence of polynomials with one map, sharing the power cache."""
    cache: dict = {}
    return [compose(g, fmap, cache) for g in gs]


def compose_maps(inner: PolyMap, outer: PolyMap) -> PolyMap:
    """The map x ↦ outer(inner(x)) … i.e. components of outer composed into inner?

    Convention: ``compose_maps(F, G)`` returns G ∘ F — apply F first.  This
    matches word semantics where the first symbol acts innermost.
    """
    cache: dict = {}
    comps = [compose(comp, inner, cache) for comp in outer.components]
    return PolyMap(inner.ctx, comps)


# ---------------------------------------------------------------------------
# text grammar:  integers, p/q rationals, named variables, + - * ^, parens.
# Multiplication is always explicit.
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*^()/]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad = len(text) - len(stripped)
            raise PolyParseError(f"unexpected character {text[bad]!r}", text, bad)
        if m.group("int") is not None:
            tokens.append(("int", m.group("int"), m.start("int")))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str, ctx: VarContext):
        self.text = text
        self.ctx = ctx
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise PolyParseError("unexpected end of input", self.text, len(self.text))
        self.i += 1
        return tok

    def expect_op(self, op: str):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            raise PolyParseError(f"expected {op!r}", self.text, tok[2])

    def parse(self) -> Polynomial:
        p = self.expr()
        tok = self.peek()
        if tok is not None:
            raise PolyParseError(f"unexpected trailing {tok[1]!r}", self.text, tok[2])
        return p

    def expr(self) -> Polynomial:
        negate = False
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] in "+-":
            self.take()
            negate = tok[1] == "-"
        p = self.term()
        if negate:
            p = -p
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in "+-":
                self.take()
                q = self.term()
                p = p - q if tok[1] == "-" else p + q
            else:
                return p

    def term(self) -> Polynomial:
        p = self.factor()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] == "*":
                self.take()
                p = p * self.factor()
            else:
                return p

    def factor(self) -> Polynomial:
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "-":
            self.take()
            return -self.factor()
        base = self.atom()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "^":
            self.take()
            etok = self.take()
            if etok[0] != "int":
                raise PolyParseError("exponent must be a nonnegative integer", self.text, etok[2])
            return base ** int(etok[1])
        return base

    def atom(self) -> Polynomial:
        tok = self.take()
        kind, value, pos = tok
        if kind == "int":
            nxt = self.peek()
            if nxt and nxt[0] == "op" and nxt[1] == "/":
                self.take()
                dtok = self.take()
                if dtok[0] != "int":
                    raise PolyParseError("expected integer denominator", self.text, dtok[2])
                if int(dtok[1]) == 0:
                    raise PolyParseError("zero denominator", self.text, dtok[2])
                return Polynomial.constant(self.ctx, Fraction(int(value), int(dtok[1])))
            return Polynomial.constant(self.ctx, int(value))
        if kind == "name":
            try:
                return Polynomial.variable(self.ctx, value)
            except UnknownVariableError:
                raise PolyParseError(f"unknown variable {value!r}", self.text, pos) from None
        if kind == "op" and value == "(":
            p = self.expr()
            self.expect_op(")")
            return p
        raise PolyParseError(f"unexpected {value!r}", self.text, pos)


def parse_poly(text: str, ctx: VarContext) -> Polynomial:
    """Parse polynomial text over the given context (see module grammar)."""
    return _Parser(text, ctx).parse()


def _frac_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _monomial_text(ctx: VarContext, m: Monomial) -> str:
    parts = []
    for i, e in enumerate(m):
        if e == 1:
            parts.append(ctx.names[i])
        elif e > 1:
            parts.append(f"{ctx.names[i]}^{e}")
    return "*".join(parts)


def poly_to_text(p: Polynomial) -> str:
    """Canonical text: terms in descending grevlex, explicit '*', '^' powers.

    The output round-trips through :func:`parse_poly` over the same context.
    """
    if not p.terms:
        return "0"
    chunks: list[str] = []
    for m, c in p.sorted_terms():
        mono = _monomial_text(p.ctx, m)
        mag = abs(c)
        if mono and mag == 1:
            body = mono
        elif mono:
            body = f"{_frac_text(mag)}*{mono}"
        else:
            body = _frac_text(mag)
        if not chunks:
            chunks.append(body if c > 0 else f"-{body}")
        else:
            chunks.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(chunks)
