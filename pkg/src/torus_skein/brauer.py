"""
brauer: the ordinary and affine (colored) Brauer algebras.

An n-connector is a perfect matching on 2n boundary vertices.  Vertices are
numbered 1..2n with the top points p_1..p_n mapped to 1..n and the bottom
points pbar_j mapped to 2n+1-j, so the boundary order p_1 < ... < p_n <
pbar_n < ... < pbar_1 is plain index order.  A colored connector labels every
strand with an integer; the label is stored at the strand's initial vertex
(the smaller index) and is read as the value for traversal from initial to
terminal vertex, negating under reversed traversal.

Products stack the right factor above the left one (left factor at the
bottom); closed loops produced by stacking turn into scalars d (color 0) or
q_{|i|} (color +-i).  The conditional expectation eps_n closes the rightmost
strand and divides by d; the trace is eps_1 ... eps_n.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .ring import RingContext, RingElem

Pair = tuple[int, int]


def _partner_map(pairs: tuple[Pair, ...], n: int) -> dict[int, int]:
    partner: dict[int, int] = {}
    for a, b in pairs:
        if not (1 <= a <= 2 * n and 1 <= b <= 2 * n) or a == b:
            raise ValueError(f"bad pair ({a},{b}) for n={n}")
        if a in partner or b in partner:
            raise ValueError("vertex matched twice")
        partner[a] = b
        partner[b] = a
    if len(partner) != 2 * n:
        raise ValueError("not a perfect matching")
    return partner


@dataclass(frozen=True)
class Connector:
    """Perfect matching on 2n vertices, stored as sorted pairs (a < b)."""

    n: int
    pairs: tuple[Pair, ...]

    @staticmethod
    def from_pairs(n: int, pairs) -> "Connector":
        norm = tuple(sorted((min(a, b), max(a, b)) for a, b in pairs))
        _partner_map(norm, n)
        return Connector(n, norm)

    @staticmethod
    def identity(n: int) -> "Connector":
        return Connector(n, tuple((i, 2 * n + 1 - i) for i in range(1, n + 1)))

    def partner(self, v: int) -> int:
        for a, b in self.pairs:
            if a == v:
                return b
            if b == v:
                return a
        raise KeyError(v)

    def __str__(self) -> str:
        return "".join(f"({a} {b})" for a, b in self.pairs)


def all_connectors(n: int) -> list[Connector]:
    """All (2n-1)!! matchings, in a deterministic order."""

    def rec(verts: tuple[int, ...]):
        if not verts:
            yield ()
            return
        a = verts[0]
        for i in range(1, len(verts)):
            b = verts[i]
            rest = verts[1:i] + verts[i + 1:]
            for tail in rec(rest):
                yield ((a, b),) + tail

    return [Connector(n, tuple(sorted(p))) for p in rec(tuple(range(1, 2 * n + 1)))]


@dataclass(frozen=True)
class ColoredConnector:
    """Connector with one integer color per strand, aligned with pairs."""

    conn: Connector
    colors: tuple[int, ...]

    @staticmethod
    def make(n: int, colored_pairs) -> "ColoredConnector":
        pairs = []
        for item in colored_pairs:
            if len(item) == 3:
                a, b, c = item
            else:
                (a, b), c = item
            if a > b:
                a, b, c = b, a, -c
            pairs.append(((a, b), c))
        pairs.sort()
        conn = Connector.from_pairs(n, [p for p, _ in pairs])
        return ColoredConnector(conn, tuple(c for _, c in pairs))

    @property
    def n(self) -> int:
        return self.conn.n

    def color_at(self, v: int) -> tuple[int, int]:
        """(partner, color-read-from-v) for the strand at vertex v."""
        for (a, b), c in zip(self.conn.pairs, self.colors):
            if a == v:
                return b, c
            if b == v:
                return a, -c
        raise KeyError(v)

    def uncolored(self) -> bool:
        return all(c == 0 for c in self.colors)

    def __str__(self) -> str:
        bits = []
        for (a, b), c in zip(self.conn.pairs, self.colors):
            bits.append(f"({a} {b})" + (f":{c}" if c else ""))
        return "".join(bits)


def parse_connector(n: int, text: str) -> ColoredConnector:
    """Parse `(i j)(k l):c...` (colors optional, default 0)."""
    import re

    items = []
    for m in re.finditer(r"\(\s*(\d+)\s+(\d+)\s*\)(?::(-?\d+))?", text):
        a, b = int(m.group(1)), int(m.group(2))
        c = int(m.group(3)) if m.group(3) else 0
        items.append((a, b, c))
    cc = ColoredConnector.make(n, items)
    return cc


def identity_colored(n: int) -> ColoredConnector:
    return ColoredConnector(Connector.identity(n), (0,) * n)


def colored_compose(ctx: RingContext, x: ColoredConnector, y: ColoredConnector
                    ) -> tuple[ColoredConnector, RingElem]:
    """Product x*y: y stacked above x.  Returns (connector, loop scalar)."""
    n = x.n
    if y.n != n:
        raise ValueError("size mismatch")

    # Node naming: ('x'|'y', vertex).  Glue x's top i to y's bottom 2n+1-i.
    # Composite boundary: top = y's top (1..n), bottom = x's bottom.
    def glue(node):
        tag, v = node
        if tag == "x" and v <= n:
            return ("y", 2 * n + 1 - v)
        if tag == "y" and v > n:
            return ("x", 2 * n + 1 - v)
        return None

    def boundary_vertex(node):
        tag, v = node
        if tag == "y" and v <= n:
            return v
        if tag == "x" and v > n:
            return v
        return None

    diags = {"x": x, "y": y}
    seen = set()
    new_pairs = []
    loops: list[int] = []

    def walk(start):
        """Walk from a boundary node to the other end, summing colors."""
        total = 0
        node = start
        while True:
            seen.add(node)
            tag, v = node
            w, c = diags[tag].color_at(v)
            total += c
            node = (tag, w)
            seen.add(node)
            g = glue(node)
            if g is None:
                return node, total
            node = g

    starts = [("y", i) for i in range(1, n + 1)] + \
             [("x", 2 * n + 1 - j) for j in range(n, 0, -1)]
    for s in starts:
        if s in seen:
            continue
        end, total = walk(s)
        a = boundary_vertex(s)
        b = boundary_vertex(end)
        assert a is not None and b is not None
        if a > b:
            a, b, total = b, a, -total
        new_pairs.append((a, b, total))

    # leftover interior cycles
    for v in range(1, n + 1):
        node = ("x", v)
        if node in seen:
            continue
        total = 0
        cur = node
        while True:
            seen.add(cur)
            tag, vv = cur
            w, c = diags[tag].color_at(vv)
            total += c
            cur = (tag, w)
            seen.add(cur)
            g = glue(cur)
            assert g is not None
            cur = g
            if cur == node:
                break
        loops.append(total)

    scalar = ctx.one
    for t in loops:
        scalar = scalar * (ctx.delta() if t == 0 else ctx.q(abs(t)))
    return ColoredConnector.make(n, new_pairs), scalar


def cl_n(ctx: RingContext, d: ColoredConnector) -> tuple[ColoredConnector, RingElem]:
    """Close the rightmost pair of vertices (p_n with pbar_n) by a color-0
    strand; closed loops become q_{|r|} or d."""
    n = d.n
    top, bot = n, n + 1  # indices of p_n and pbar_n

    def renum(v: int) -> int:
        # drop vertices n, n+1; order-preserving renumbering to 1..2n-2
        return v if v < n else v - 2

    scalar = ctx.one
    new_items = []
    pt, ct = d.color_at(top)       # strand leaving p_n, value from p_n
    if pt == bot:
        # closing makes a loop of color ct
        scalar = ctx.delta() if ct == 0 else ctx.q(abs(ct))
        for (a, b), c in zip(d.conn.pairs, d.colors):
            if {a, b} == {top, bot}:
                continue
            new_items.append((renum(a), renum(b), c))
    else:
        pb, cb = d.color_at(bot)   # strand leaving pbar_n, value from pbar_n
        # merged strand pt -- pb via the new color-0 arc; value from pt:
        # (pt -> p_n) + 0 + (pbar_n -> pb) = -ct + cb
        a, b, total = pt, pb, -ct + cb
        if a > b:
            a, b, total = b, a, -total
        new_items.append((renum(a), renum(b), total))
        for (u, v), c in zip(d.conn.pairs, d.colors):
            if top in (u, v) or bot in (u, v):
                continue
            new_items.append((renum(u), renum(v), c))
    return ColoredConnector.make(n - 1, new_items), scalar


class BrauerElem:
    """Finite Lambda-hat-linear combination of colored n-connectors."""

    __slots__ = ("ctx", "n", "terms")

    def __init__(self, ctx: RingContext, n: int,
                 terms: dict[ColoredConnector, RingElem]):
        self.ctx = ctx
        self.n = n
        self.terms = {d: c for d, c in terms.items() if not c.is_zero()}

    @staticmethod
    def basis(ctx: RingContext, d: ColoredConnector) -> "BrauerElem":
        return BrauerElem(ctx, d.n, {d: ctx.one})

    @staticmethod
    def zero(ctx: RingContext, n: int) -> "BrauerElem":
        return BrauerElem(ctx, n, {})

    @staticmethod
    def one(ctx: RingContext, n: int) -> "BrauerElem":
        return BrauerElem.basis(ctx, identity_colored(n))

    def __add__(self, other: "BrauerElem") -> "BrauerElem":
        if other.n != self.n:
            raise ValueError("size mismatch")
        out = dict(self.terms)
        for d, c in other.terms.items():
            out[d] = out.get(d, self.ctx.zero) + c
        return BrauerElem(self.ctx, self.n, out)

    def __sub__(self, other: "BrauerElem") -> "BrauerElem":
        return self + other.scale(self.ctx.from_int(-1))

    def scale(self, c: RingElem) -> "BrauerElem":
        return BrauerElem(self.ctx, self.n,
                          {d: v * c for d, v in self.terms.items()})

    def __mul__(self, other: "BrauerElem") -> "BrauerElem":
        if other.n != self.n:
            raise ValueError("size mismatch")
        out: dict[ColoredConnector, RingElem] = {}
        for d1, c1 in self.terms.items():
            for d2, c2 in other.terms.items():
                d, s = colored_compose(self.ctx, d1, d2)
                out[d] = out.get(d, self.ctx.zero) + c1 * c2 * s
        return BrauerElem(self.ctx, self.n, out)

    def __eq__(self, other) -> bool:
        return (isinstance(other, BrauerElem) and self.n == other.n
                and self.terms == other.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def expect(self) -> "BrauerElem":
        """eps_n = d^{-1} cl_n, a conditional expectation onto size n-1."""
        dinv = self.ctx.delta(-1)
        out: dict[ColoredConnector, RingElem] = {}
        for d, c in self.terms.items():
            d2, s = cl_n(self.ctx, d)
            out[d2] = out.get(d2, self.ctx.zero) + c * s * dinv
        return BrauerElem(self.ctx, self.n - 1, out)

    def trace(self) -> RingElem:
        """eps = eps_1 ... eps_n; the coefficient of the empty 0-connector."""
        x = self
        for _ in range(self.n):
            x = x.expect()
        if not x.terms:
            return self.ctx.zero
        (d, c), = x.terms.items()
        assert d.n == 0
        return c

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for d in sorted(self.terms, key=lambda t: (t.conn.pairs, t.colors)):
            bits.append(f"({self.terms[d]}) * {d}")
        return " + ".join(bits)


def brauer_reflect(d: ColoredConnector) -> ColoredConnector:
    """Vertical mirror with all colors replaced by their opposites."""
    n = d.n
    m = 2 * n + 1
    items = []
    for (a, b), c in zip(d.conn.pairs, d.colors):
        items.append((m - b, m - a, -c))
    return ColoredConnector.make(n, items)


def gram_matrix(ctx: RingContext, diagrams: list[ColoredConnector]
                ) -> tuple[list[list[RingElem]], RingElem]:
    """The matrix (eps(d d')) over a reflection-closed list, and its exact
    determinant over the ground ring."""
    dset = {(d.conn.pairs, d.colors) for d in diagrams}
    for d in diagrams:
        r = brauer_reflect(d)
        if (r.conn.pairs, r.colors) not in dset:
            raise ValueError("diagram list is not closed under reflection")
    mat = []
    for d1 in diagrams:
        row = []
        e1 = BrauerElem.basis(ctx, d1)
        for d2 in diagrams:
            row.append((e1 * BrauerElem.basis(ctx, d2)).trace())
        mat.append(row)
    return mat, exact_det(ctx, mat)


def exact_det(ctx: RingContext, mat: list[list[RingElem]]) -> RingElem:
    """Exact determinant by memoized expansion over column subsets."""
    m = len(mat)
    if m == 0:
        return ctx.one
    if m > 14:
        raise ValueError("exact determinant limited to 14x14")
    full = (1 << m) - 1

    memo: dict[int, RingElem] = {0: ctx.one}

    def det(cols: int, row: int) -> RingElem:
        if cols in memo:
            return memo[cols]
        total = ctx.zero
        sign = 1
        c = cols
        j = 0
        while c:
            if c & 1:
                entry = mat[row][j]
                if not entry.is_zero():
                    sub = det(cols & ~(1 << j), row + 1)
                    term = entry * sub
                    total = total + (term if sign > 0 else -term)
                sign = -sign
            c >>= 1
            j += 1
        memo[cols] = total
        return total

    return det(full, 0)


def rational_rank(rows: list[list[Fraction]]) -> int:
    """Rank of a rational matrix by exact Gaussian elimination."""
    mat = [list(r) for r in rows]
    rank = 0
    ncols = len(mat[0]) if mat else 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(mat)):
            if mat[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        pv = mat[rank][col]
        for r in range(rank + 1, len(mat)):
            if mat[r][col] != 0:
                f = mat[r][col] / pv
                for c2 in range(col, ncols):
                    mat[r][c2] -= f * mat[rank][c2]
        rank += 1
        if rank == len(mat):
            break
    return rank
