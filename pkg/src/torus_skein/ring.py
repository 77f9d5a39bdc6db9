"""
ring: exact arithmetic in the ground ring of the torus skein engine.

The ring is Z[l^{±1}, z, d^{±1}, q1, q2, ...] / (l^{-1} - l = z*(d - 1)), where
`l` and `d` are invertible.  Elements are kept in a normal form in which no
monomial contains both a positive power of z and a nonzero power of d; the
defining relation rewrites

    z*d      ->  z + l^{-1} - l
    z*d^{-1} ->  z - l^{-1}*d^{-1} + l*d^{-1}

until every monomial is clean.  Each rewrite strictly decreases the multiset of
(z-degree + |d-degree|) over offending monomials, so normalization terminates.
Confluence of this normal form is not proved here; equality is decidable by
normal-form comparison and is cross-checked against random numeric evaluation
in the test suite.

A monomial is a tuple (a, b, c, q): the exponents of l, z, d and a sorted tuple
of (index, exponent) pairs for the q-variables (b >= 0, q exponents >= 1).
Coefficients are Python ints.  All values are immutable; operations are pure.
"""

from __future__ import annotations

import itertools
import random
import threading
from fractions import Fraction
from typing import Iterable, Mapping, Union

Monomial = tuple[int, int, int, tuple[tuple[int, int], ...]]

_ONE_MON: Monomial = (0, 0, 0, ())


class QIndexOverflow(Exception):
    """A q_r with r beyond the context's q_index_bound was requested."""


class RingContext:
    """Shared context: the largest supported q index plus memo tables.

    The paper's q_r family is infinite; the context bounds it so that overflow
    is an error rather than silent truncation.  The f_r memo supports
    concurrent insert-or-get (guarded by a lock; results are deterministic).
    """

    def __init__(self, q_index_bound: int = 8):
        if q_index_bound < 1:
            raise ValueError("q_index_bound must be >= 1")
        self.q_index_bound = q_index_bound
        self._fpoly_memo: dict[int, RingElem] = {}
        self._lock = threading.Lock()
        self.zero = RingElem(self, {})
        self.one = RingElem(self, {_ONE_MON: 1})
        # engine caches live here so that everything keyed by coefficients
        # shares one home; populated lazily by the tangle engine
        self.engine_memo: dict = {}
        self.word_cache: dict = {}

    def check_q(self, r: int) -> None:
        if r < 1:
            raise ValueError(f"q index must be >= 1, got {r}")
        if r > self.q_index_bound:
            raise QIndexOverflow(
                f"q_{r} exceeds q_index_bound={self.q_index_bound}")

    def from_int(self, n: int) -> "RingElem":
        return RingElem(self, {_ONE_MON: n}) if n else self.zero

    def lam(self, k: int = 1) -> "RingElem":
        return RingElem(self, {(k, 0, 0, ()): 1})

    def z_var(self) -> "RingElem":
        return RingElem(self, {(0, 1, 0, ()): 1})

    def delta(self, k: int = 1) -> "RingElem":
        return RingElem(self, {(0, 0, k, ()): 1})

    def q(self, r: int, e: int = 1) -> "RingElem":
        self.check_q(r)
        if e < 1:
            raise ValueError("q exponents must be >= 1")
        return RingElem(self, {(0, 0, 0, ((r, e),)): 1})

    def monomial(self, a: int = 0, b: int = 0, c: int = 0,
                 q: Iterable[tuple[int, int]] = ()) -> "RingElem":
        qt = tuple(sorted(q))
        for r, e in qt:
            self.check_q(r)
            if e < 1:
                raise ValueError("q exponents must be >= 1")
        if b < 0:
            raise ValueError("z exponent must be >= 0")
        return RingElem(self, _normalize_terms({(a, b, c, qt): 1}))

    def fpoly(self, r: int) -> "RingElem":
        """f_r(q_1, ..., q_r): the value of the negatively wound loop.

        Computed by unrolling the curve recursion with positively wound loops
        mapped to q_s, the empty loop to d and negative loops back to fpoly:

            f_1         = q_1
            f_r         = l * Theta(1, r-1)
            Theta(a, 0) = l^{-1} * theta(a)
            Theta(a, b) = l^2 * Theta(a+1, b-1)
                          + z * (theta(a) * theta(-b) - theta(a - b))

        where theta(s) = q_s for s >= 1, theta(0) = d, theta(-s) = fpoly(s).
        """
        if r < 1:
            raise ValueError("fpoly index must be >= 1")
        self.check_q(r)
        with self._lock:
            hit = self._fpoly_memo.get(r)
        if hit is not None:
            return hit
        if r == 1:
            val = self.q(1)
        else:
            def theta(s: int) -> RingElem:
                if s > 0:
                    return self.q(s)
                if s == 0:
                    return self.delta()
                return self.fpoly(-s)

            def big_theta(a: int, b: int) -> RingElem:
                if b == 0:
                    return self.lam(-1) * theta(a)
                return (self.lam(2) * big_theta(a + 1, b - 1)
                        + self.z_var() * (theta(a) * theta(-b)
                                          - theta(a - b)))

            val = self.lam(1) * big_theta(1, r - 1)
        with self._lock:
            self._fpoly_memo.setdefault(r, val)
            return self._fpoly_memo[r]


def _normalize_terms(terms: Mapping[Monomial, int]) -> dict[Monomial, int]:
    out: dict[Monomial, int] = {}
    stack = [(m, c) for m, c in terms.items() if c]
    while stack:
        (a, b, c, q), coef = stack.pop()
        if b > 0 and c != 0:
            if c > 0:
                stack.append(((a, b, c - 1, q), coef))
                stack.append(((a - 1, b - 1, c - 1, q), coef))
                stack.append(((a + 1, b - 1, c - 1, q), -coef))
            else:
                stack.append(((a, b, c + 1, q), coef))
                stack.append(((a - 1, b - 1, c, q), -coef))
                stack.append(((a + 1, b - 1, c, q), coef))
            continue
        key = (a, b, c, q)
        new = out.get(key, 0) + coef
        if new:
            out[key] = new
        elif key in out:
            del out[key]
    return out


def _mul_mon(m1: Monomial, m2: Monomial) -> Monomial:
    a1, b1, c1, q1 = m1
    a2, b2, c2, q2 = m2
    if not q1:
        q = q2
    elif not q2:
        q = q1
    else:
        acc: dict[int, int] = dict(q1)
        for r, e in q2:
            acc[r] = acc.get(r, 0) + e
        q = tuple(sorted(acc.items()))
    return (a1 + a2, b1 + b2, c1 + c2, q)


NumericValue = Union[int, Fraction]


class RingElem:
    """An element of the ground ring in normal form.

    Instances are immutable, hashable and support +, -, *, unary -, ** with a
    nonnegative integer, and exact equality (normal-form comparison).  Mixing
    elements of different contexts is an error.
    """

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: RingContext, terms: dict[Monomial, int]):
        self.ctx = ctx
        self.terms = terms
        self._hash: int | None = None

    # -- ring operations ---------------------------------------------------

    def _coerce(self, other) -> "RingElem":
        if isinstance(other, RingElem):
            if other.ctx is not self.ctx:
                raise ValueError("mixed ring contexts")
            return other
        if isinstance(other, int):
            return self.ctx.from_int(other)
        return NotImplemented

    def __add__(self, other) -> "RingElem":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.terms:
            return other
        if not other.terms:
            return self
        out = dict(self.terms)
        for m, c in other.terms.items():
            new = out.get(m, 0) + c
            if new:
                out[m] = new
            elif m in out:
                del out[m]
        return RingElem(self.ctx, out)

    __radd__ = __add__

    def __neg__(self) -> "RingElem":
        return RingElem(self.ctx, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "RingElem":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "RingElem":
        return (-self) + other

    def __mul__(self, other) -> "RingElem":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.terms or not other.terms:
            return self.ctx.zero
        raw: dict[Monomial, int] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mul_mon(m1, m2)
                raw[m] = raw.get(m, 0) + c1 * c2
        for _a, b, c, q in raw:
            for r, _e in q:
                self.ctx.check_q(r)
        return RingElem(self.ctx, _normalize_terms(raw))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "RingElem":
        if n < 0:
            raise ValueError("negative powers are not defined on RingElem")
        out = self.ctx.one
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = self.ctx.from_int(other)
        if not isinstance(other, RingElem):
            return NotImplemented
        return self.ctx is other.ctx and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def times_lambda(self, k: int) -> "RingElem":
        if k == 0:
            return self
        return RingElem(self.ctx,
                        {(a + k, b, c, q): co
                         for (a, b, c, q), co in self.terms.items()})

    # -- specialization -----------------------------------------------------

    def evaluate(self, lam: NumericValue, z: NumericValue, delta: NumericValue,
                 qvals: Mapping[int, NumericValue]) -> Fraction:
        """Numeric evaluation; the caller must supply a relation-respecting
        point (checked)."""
        lam = Fraction(lam)
        z = Fraction(z)
        delta = Fraction(delta)
        if lam == 0 or delta == 0:
            raise ValueError("l and d must be invertible")
        if 1 / lam - lam != z * (delta - 1):
            raise ValueError("assignment violates l^-1 - l = z*(d - 1)")
        total = Fraction(0)
        for (a, b, c, q), coef in self.terms.items():
            val = Fraction(coef) * lam ** a * z ** b * delta ** c
            for r, e in q:
                val *= Fraction(qvals[r]) ** e
            total += val
        return total

    def specialize(self, lam: "RingElem", lam_inv: "RingElem", z: "RingElem",
                   delta: "RingElem", delta_inv: "RingElem",
                   qmap: Mapping[int, "RingElem"]) -> "RingElem":
        """Ring-valued specialization (a homomorphism once the images satisfy
        the defining relation, which is checked)."""
        ctx = lam.ctx
        if lam * lam_inv != ctx.one or delta * delta_inv != ctx.one:
            raise ValueError("l and d images must be invertible")
        if lam_inv - lam != z * (delta - ctx.one):
            raise ValueError("assignment violates l^-1 - l = z*(d - 1)")
        total = ctx.zero
        for (a, b, c, q), coef in self.terms.items():
            val = ctx.from_int(coef)
            val = val * (lam if a > 0 else lam_inv) ** abs(a)
            val = val * z ** b
            val = val * (delta if c > 0 else delta_inv) ** abs(c)
            for r, e in q:
                val = val * qmap[r] ** e
            total = total + val
        return total

    def e_specialize(self) -> "RingElem":
        """The Brauer specialization l -> 1, z -> 0 (d and q fixed)."""
        ctx = self.ctx
        out: dict[Monomial, int] = {}
        for (a, b, c, q), coef in self.terms.items():
            if b:
                continue
            key = (0, 0, c, q)
            new = out.get(key, 0) + coef
            if new:
                out[key] = new
            elif key in out:
                del out[key]
        return RingElem(ctx, out)

    # -- text form -----------------------------------------------------------

    def __str__(self) -> str:
        return format_ring(self)

    def __repr__(self) -> str:
        return f"RingElem({format_ring(self)})"


# ---------------------------------------------------------------------------
# textual ring literals
#
# Grammar shared with the CLI: integer coefficients; variables l, z, d, q<r>;
# exponent suffix ^<int>; juxtaposition or '*' for products; '+'/'-' for sums.
# Example: l^-2*q2 + 3*z*d^-1


def _mon_sort_key(m: Monomial):
    a, b, c, q = m
    return (len(q), q, b, c, a)


def format_ring(x: RingElem) -> str:
    if not x.terms:
        return "0"
    parts = []
    for m in sorted(x.terms, key=_mon_sort_key):
        coef = x.terms[m]
        a, b, c, q = m
        factors = []
        if a:
            factors.append("l" if a == 1 else f"l^{a}")
        if b:
            factors.append("z" if b == 1 else f"z^{b}")
        if c:
            factors.append("d" if c == 1 else f"d^{c}")
        for r, e in q:
            factors.append(f"q{r}" if e == 1 else f"q{r}^{e}")
        if not factors:
            body = str(abs(coef))
        elif abs(coef) == 1:
            body = "*".join(factors)
        else:
            body = "*".join([str(abs(coef))] + factors)
        parts.append((coef < 0, body))
    pieces = []
    for i, (neg, body) in enumerate(parts):
        if i == 0:
            pieces.append(("-" if neg else "") + body)
        else:
            pieces.append(("- " if neg else "+ ") + body)
    return " ".join(pieces)


class RingParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} (at offset {pos})")
        self.pos = pos


def parse_ring(ctx: RingContext, text: str) -> RingElem:
    """Parse a ring literal.  Inverse of format_ring on canonical output."""
    toks = _tokenize(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else (None, len(text))

    def take():
        nonlocal pos
        t = toks[pos]
        pos += 1
        return t

    def parse_factor(sign: int) -> RingElem:
        kind, at = peek()
        if kind is None:
            raise RingParseError("unexpected end of literal", at)
        tok, at = take()
        if isinstance(tok, int):
            base = ctx.from_int(tok)
            exp = parse_power(at)
            if exp != 1:
                raise RingParseError("integer coefficients take no exponent", at)
            return base * sign
        if tok == "l":
            return ctx.lam(parse_power(at)) * sign
        if tok == "z":
            e = parse_power(at)
            if e < 0:
                raise RingParseError("z is not invertible", at)
            return (ctx.z_var() ** e) * sign
        if tok == "d":
            return ctx.delta(parse_power(at)) * sign
        if isinstance(tok, tuple) and tok[0] == "q":
            e = parse_power(at)
            if e < 1:
                raise RingParseError("q variables take positive exponents", at)
            return ctx.q(tok[1], e) * sign
        raise RingParseError(f"unexpected token {tok!r}", at)

    def parse_power(at: int) -> int:
        nonlocal pos
        kind, _ = peek()
        if kind == "^":
            take()
            k, at2 = peek()
            if not isinstance(k, int):
                raise RingParseError("expected integer exponent", at2)
            take()
            return k
        return 1

    def parse_term(sign: int) -> RingElem:
        acc = parse_factor(sign)
        while True:
            kind, _ = peek()
            if kind == "*":
                take()
                acc = acc * parse_factor(1)
            elif kind in ("l", "z", "d") or isinstance(kind, tuple):
                acc = acc * parse_factor(1)
            elif isinstance(kind, int) and kind >= 0:
                # juxtaposed nonnegative integers would be ambiguous
                raise RingParseError("missing operator before integer", peek()[1])
            else:
                return acc

    total = ctx.zero
    sign = 1
    kind, _ = peek()
    if kind == "-":
        take()
        sign = -1
    elif kind == "+":
        take()
    total = total + parse_term(sign)
    while True:
        kind, at = peek()
        if kind is None:
            return total
        if kind == "+":
            take()
            total = total + parse_term(1)
        elif kind == "-":
            take()
            total = total + parse_term(-1)
        else:
            raise RingParseError(f"unexpected token {kind!r}", at)


def _tokenize(text: str):
    toks = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*^":
            toks.append((ch, i))
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append((int(text[i:j]), i))
            i = j
            continue
        if ch in "lzd":
            toks.append((ch, i))
            i += 1
            continue
        if ch == "q":
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j == i + 1:
                raise RingParseError("q needs an index", i)
            toks.append((("q", int(text[i + 1:j])), i))
            i = j
            continue
        raise RingParseError(f"bad character {ch!r}", i)
    # post-process: '^' followed by '-' then int means a negative exponent
    out = []
    i = 0
    while i < len(toks):
        if (toks[i][0] == "^" and i + 2 < len(toks) + 1 and i + 1 < len(toks)
                and toks[i + 1][0] == "-" and i + 2 < len(toks)
                and isinstance(toks[i + 2][0], int)):
            out.append(toks[i])
            out.append((-toks[i + 2][0], toks[i + 1][1]))
            i += 3
        else:
            out.append(toks[i])
            i += 1
    return out


# ---------------------------------------------------------------------------
# randomized evaluation oracle


def random_points(ctx: RingContext, count: int, seed: int):
    """Yield relation-respecting numeric points, mixing generic points with
    the z = 0 family (l = 1, random d)."""
    rng = random.Random(seed)

    def nz(lo=-6, hi=6):
        while True:
            v = Fraction(rng.randint(lo, hi), rng.randint(1, 4))
            if v != 0:
                return v

    for k in range(count):
        qvals = {r: Fraction(rng.randint(-5, 5), rng.randint(1, 3))
                 for r in range(1, ctx.q_index_bound + 1)}
        if k % 4 == 3:
            yield (Fraction(1), Fraction(0), nz(), qvals)
        else:
            while True:
                lam = nz()
                z = nz()
                delta = (1 / lam - lam) / z + 1
                if delta != 0:
                    break
            yield (lam, z, delta, qvals)


def eq_by_random_eval(x: RingElem, y: RingElem, trials: int = 20,
                      seed: int = 0) -> bool:
    for lam, z, delta, qvals in random_points(x.ctx, trials, seed):
        if x.evaluate(lam, z, delta, qvals) != y.evaluate(lam, z, delta, qvals):
            return False
    return True
