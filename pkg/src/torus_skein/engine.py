"""
engine: slice words, strand tracing and the normalizer for affine tangle
diagrams.

Words are tuples of slices listed from the BOTTOM of the diagram upward, so
concatenating words is the algebra product (left factor below).  Slices:

    ('X', i, s)   crossing of positions i, i+1 with braid sign s; s = +1 means
                  the arc rising from position i to i+1 (the '/' arc) is the
                  over-strand.  i = 0 crosses the flagpole (raw words only).
    ('A', i)      cap: the strands at positions i, i+1 merge (local maximum).
    ('U', i)      cup: a new adjacent pair is born at positions i, i+1.
    ('W', j, s)   one winding unit of sign s on the strand at position j; a
                  block equal to x_j^s.  ('W', 1, s) is the same element as
                  the adjacent pole-crossing pair ('X',0,s)('X',0,s).

Positions count the flagpole at 0; ordinary strands start at 1.  Engine words
keep the pole parked at position 0 (pole crossings are packaged into 'W'
blocks); the raw layer validates wandering-pole words and converts them.

The normalizer reduces a word to the free basis of triples (mu, d, nu):
winding exponents parked at each strand's initial vertex around a totally
descending, self-crossing-free ordinary core.  Winding blocks move along
their strand by the verbatim relations x_{r+1} = g_r x_r g_r and the
untwisting / Kauffman skein relations; closed loops with gathered windings
evaluate to d, q_w or f_w(q).  Everything is exact over the ground ring.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from .ring import QIndexOverflow, RingContext, RingElem

Slice = tuple
Word = tuple[Slice, ...]

DEFAULT_MAX_TERMS = 10 ** 6


def max_terms_default() -> int:
    env = os.environ.get("TORUS_SKEIN_MAX_TERMS")
    return int(env) if env else DEFAULT_MAX_TERMS


class WordError(ValueError):
    """Invalid word (width bookkeeping or slice parameters)."""


class PoleCapture(WordError):
    """The flagpole enters a cap or cup."""


class PoleDisplaced(WordError):
    """The flagpole does not return to position 0."""


class TermExplosion(RuntimeError):
    """The live-term guard tripped."""


class EngineEscalation(RuntimeError):
    """A configuration outside the proven move set was reached; per the spec
    such cases are surfaced, never patched silently."""


# ---------------------------------------------------------------------------
# width bookkeeping


def word_widths(n_bot: int, word: Word) -> list[int]:
    """Widths (pole included) at every level; raises WordError on mismatch."""
    m = n_bot + 1
    widths = [m]
    for sl in word:
        kind = sl[0]
        if kind == "X":
            if not (0 <= sl[1] <= m - 2):
                raise WordError(f"crossing {sl} out of range at width {m}")
        elif kind == "A":
            if not (1 <= sl[1] <= m - 2):
                raise WordError(f"cap {sl} out of range at width {m}")
            m -= 2
        elif kind == "U":
            if not (1 <= sl[1] <= m):
                raise WordError(f"cup {sl} out of range at width {m}")
            m += 2
        elif kind == "W":
            if not (1 <= sl[1] <= m - 1):
                raise WordError(f"winding {sl} out of range at width {m}")
        else:
            raise WordError(f"unknown slice {sl}")
        widths.append(m)
    return widths


# ---------------------------------------------------------------------------
# tracing


@dataclass
class Ev:
    kind: str          # 'x' | 'mark' | 'turn' | 'pole'
    slice_idx: int
    dirn: int          # +1 upward, -1 downward (0 for turns)
    shape: str = ""    # '/' or '\\' for crossings
    over: bool = False
    sign: int = 0      # braid sign for 'x'/'pole', winding sign for 'mark'
    pos: int = 0       # position parameter (j for marks)
    turn: str = ""     # 'cap' | 'cup'


@dataclass
class Comp:
    idx: int
    closed: bool
    ends: tuple        # (start node, end node) for open strands, () for loops
    events: list[Ev] = field(default_factory=list)
    arc_ids: set[int] = field(default_factory=set)
    init_vertex: int = 0
    term_vertex: int = 0
    is_pole: bool = False


class TraceResult:
    def __init__(self, n_bot, n_top, comps, widths, occ):
        self.n_bot = n_bot
        self.n_top = n_top
        self.comps: list[Comp] = comps
        self.widths = widths
        self.occupancy = occ   # level -> list of comp idx per position

    def strands(self) -> list[Comp]:
        """Components in standard order, flagpole excluded."""
        return [c for c in self.comps if not c.is_pole]


def trace_word(n_bot: int, word: Word) -> TraceResult:
    widths = word_widths(n_bot, word)
    L = len(word)
    n_top = widths[-1] - 1
    if L == 0:
        comps = []
        for p in range(n_bot + 1):
            vtx_top, vtx_bot = p, n_top + (n_bot + 1 - p)
            c = Comp(len(comps), False, ((0, p), (0, p)), [], set(),
                     init_vertex=min(vtx_top, vtx_bot),
                     term_vertex=max(vtx_top, vtx_bot))
            c.is_pole = (p == 0)
            comps.append(c)
        return TraceResult(n_bot, n_top, comps, widths,
                           [[c.idx for c in comps]])

    arcs: list[tuple] = []   # (lower-ish node a, node b, payload)
    adj: dict[tuple, list[int]] = {}

    def add_arc(a, b, payload):
        aid = len(arcs)
        arcs.append((a, b, payload))
        adj.setdefault(a, []).append(aid)
        adj.setdefault(b, []).append(aid)

    for k, sl in enumerate(word):
        m = widths[k]
        kind = sl[0]
        if kind == "X":
            i, s = sl[1], sl[2]
            add_arc((k, i), (k + 1, i + 1), ("x", k, "/", s))
            add_arc((k, i + 1), (k + 1, i), ("x", k, "\\", s))
            for p in range(m):
                if p not in (i, i + 1):
                    add_arc((k, p), (k + 1, p), ("s", k))
        elif kind == "A":
            i = sl[1]
            add_arc((k, i), (k, i + 1), ("turn", k, "cap"))
            for p in range(m):
                if p in (i, i + 1):
                    continue
                add_arc((k, p), (k + 1, p if p < i else p - 2), ("s", k))
        elif kind == "U":
            i = sl[1]
            add_arc((k + 1, i), (k + 1, i + 1), ("turn", k, "cup"))
            for p in range(m):
                add_arc((k, p), (k + 1, p if p < i else p + 2), ("s", k))
        elif kind == "W":
            j, s = sl[1], sl[2]
            for p in range(m):
                if p == j:
                    add_arc((k, p), (k + 1, p), ("mark", k, j, s))
                else:
                    add_arc((k, p), (k + 1, p), ("s", k))

    used = [False] * len(arcs)

    def other_end(node, aid):
        a, b, _ = arcs[aid]
        return b if node == a else a

    def ev_of(aid, from_node) -> Optional[Ev]:
        a, b, payload = arcs[aid]
        kind = payload[0]
        if kind == "s":
            return None
        if kind == "turn":
            return Ev("turn", payload[1], 0, turn=payload[2])
        if kind == "mark":
            return Ev("mark", payload[1], +1 if from_node == a else -1,
                      sign=payload[3], pos=payload[2])
        _, k, shape, s = payload
        over = (shape == "/") == (s == 1)
        return Ev("x", k, +1 if from_node == a else -1, shape=shape,
                  over=over, sign=s)

    def walk(start_node, start_aid):
        events, arc_ids = [], set()
        node, aid = start_node, start_aid
        while True:
            used[aid] = True
            arc_ids.add(aid)
            ev = ev_of(aid, node)
            if ev is not None:
                events.append(ev)
            node = other_end(node, aid)
            nxt = [x for x in adj.get(node, []) if x != aid]
            if not nxt:
                return events, arc_ids, node
            aid = nxt[0]
            if used[aid]:
                return events, arc_ids, node

    def vertex_of(node) -> int:
        lvl, p = node
        if lvl == L:
            return p
        return n_top + (n_bot + 1 - p)

    comps: list[Comp] = []
    boundary = sorted(
        [(vertex_of((L, p)), (L, p)) for p in range(widths[-1])]
        + [(vertex_of((0, p)), (0, p)) for p in range(widths[0])])
    for vtx, node in boundary:
        aids = adj.get(node, [])
        if not aids or used[aids[0]]:
            continue
        events, arc_ids, endn = walk(node, aids[0])
        comps.append(Comp(len(comps), False, (node, endn), events, arc_ids,
                          init_vertex=vtx, term_vertex=vertex_of(endn)))

    loop_starts = sorted(
        (arcs[aid][2][1], aid) for aid in range(len(arcs))
        if not used[aid] and arcs[aid][2][0] == "turn"
        and arcs[aid][2][2] == "cup")
    for _, cup_aid in loop_starts:
        if used[cup_aid]:
            continue
        a, b, _ = arcs[cup_aid]
        left = min((a, b), key=lambda n: n[1])
        nxt = [x for x in adj[left] if x != cup_aid]
        events, arc_ids, _ = walk(left, nxt[0])
        if cup_aid not in arc_ids:
            used[cup_aid] = True
            arc_ids.add(cup_aid)
            events.append(Ev("turn", arcs[cup_aid][2][1], 0, turn="cup"))
        comps.append(Comp(len(comps), True, (), events, arc_ids))

    if not all(used):
        raise AssertionError("untraced arcs remain (loop without a cup?)")

    # flagpole = the open component through the bottom node (0, 0)
    for c in comps:
        if not c.closed and ((0, 0) in c.ends or (L, 0) in c.ends):
            c.is_pole = True
            break

    # reclassify crossings against the pole as pole events
    pole_idx = next((c.idx for c in comps if c.is_pole), None)
    owner: dict[int, int] = {}
    for c in comps:
        for aid in c.arc_ids:
            owner[aid] = c.idx
    x_owners: dict[int, list[int]] = {}
    for aid, (_a, _b, payload) in enumerate(arcs):
        if payload[0] == "x":
            x_owners.setdefault(payload[1], []).append(owner[aid])
    if pole_idx is not None:
        for c in comps:
            if c.is_pole:
                continue
            for ev in c.events:
                if ev.kind == "x" and pole_idx in x_owners[ev.slice_idx] \
                        and c.idx in x_owners[ev.slice_idx]:
                    ev.kind = "pole"

    node_owner = {}
    for aid, (a, b, _p) in enumerate(arcs):
        node_owner[a] = owner[aid]
        node_owner[b] = owner[aid]
    occ = [[node_owner.get((lvl, p), -1) for p in range(widths[lvl])]
           for lvl in range(L + 1)]
    return TraceResult(n_bot, n_top, comps, widths, occ)


# ---------------------------------------------------------------------------
# raw-word validation + conversion to engine form


def validate_word(n_bot: int, word: Word) -> None:
    """Width bookkeeping plus pole discipline on a raw word."""
    m = n_bot + 1
    pos = 0
    for k, sl in enumerate(word):
        kind = sl[0]
        if kind == "X":
            if not (0 <= sl[1] <= m - 2):
                raise WordError(f"crossing {sl} out of range at width {m}")
            i = sl[1]
            if pos == i:
                pos = i + 1
            elif pos == i + 1:
                pos = i
        elif kind == "A":
            if not (1 <= sl[1] <= m - 2):
                raise WordError(f"cap {sl} out of range at width {m}")
            i = sl[1]
            if pos in (i, i + 1):
                raise PoleCapture(f"pole enters cap at slice {k}")
            if pos > i + 1:
                pos -= 2
            m -= 2
        elif kind == "U":
            if not (1 <= sl[1] <= m):
                raise WordError(f"cup {sl} out of range at width {m}")
            if pos >= sl[1]:
                pos += 2
            m += 2
        elif kind == "W":
            if not (1 <= sl[1] <= m - 1):
                raise WordError(f"winding {sl} out of range at width {m}")
        else:
            raise WordError(f"unknown slice {sl}")
    if pos != 0:
        raise PoleDisplaced(f"pole ends at position {pos}")


def to_engine_word(word: Word) -> Word:
    """Package adjacent pole-crossing pairs into winding blocks."""
    out: list[Slice] = []
    i = 0
    n = len(word)
    while i < n:
        sl = word[i]
        if sl[0] == "X" and sl[1] == 0:
            if i + 1 >= n or word[i + 1][:2] != ("X", 0):
                raise EngineEscalation(
                    "unpaired pole crossing: word not in simple winding form")
            s1, s2 = sl[2], word[i + 1][2]
            if s1 == s2:
                out.append(("W", 1, s1))
            i += 2
            continue
        out.append(sl)
        i += 1
    return tuple(out)


def from_engine_word(word: Word) -> Word:
    """Expand winding blocks into raw slices (x_j by braid conjugation)."""
    out: list[Slice] = []
    for sl in word:
        if sl[0] != "W":
            out.append(sl)
            continue
        j, s = sl[1], sl[2]
        out.extend(("X", r, s) for r in range(j - 1, 0, -1))
        out.append(("X", 0, s))
        out.append(("X", 0, s))
        out.extend(("X", r, s) for r in range(1, j))
    return tuple(out)


# ---------------------------------------------------------------------------
# basis triples


@dataclass(frozen=True)
class BasisTriple:
    """Basis element: winding exponents mu (bottom-initial slots) and nu
    (top-initial slots) around an n-connector."""

    n: int
    mu: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]
    nu: tuple[int, ...]

    def __str__(self) -> str:
        conn = "".join(f"({a} {b})" for a, b in self.pairs)
        return (",".join(map(str, self.mu)) + "|" + conn + "|"
                + ",".join(map(str, self.nu)))


def triple_identity(n: int) -> BasisTriple:
    pairs = tuple((i, 2 * n + 1 - i) for i in range(1, n + 1))
    return BasisTriple(n, (0,) * n, pairs, (0,) * n)


def check_triple(t: BasisTriple) -> None:
    partner: dict[int, int] = {}
    for a, b in t.pairs:
        partner[a] = b
        partner[b] = a
    if len(partner) != 2 * t.n:
        raise ValueError("bad connector")
    for i in range(1, t.n + 1):
        if t.nu[i - 1] and partner[i] < i:
            raise ValueError(f"nu_{i} sits on a non-initial vertex")
    for j in range(1, t.n + 1):
        v = 2 * t.n + 1 - j
        if t.mu[j - 1] and partner[v] < v:
            raise ValueError(f"mu_{j} sits on a non-initial vertex")


# ---------------------------------------------------------------------------
# local cleanup rules (exact, strictly shrinking)


def cleanup(ctx: RingContext, n_bot: int, word: Word
            ) -> tuple[RingElem, Word]:
    """Greedy adjacent-slice simplification.

    Rules: inverse crossing pairs and opposite winding pairs cancel;
    cup-then-cap circles give d; cup/cap zigzags straighten; a crossing
    absorbed by an adjacent cap or cup is a kink worth l^{-s}.
    """
    coeff = ctx.one
    w = list(word)
    changed = True
    while changed:
        changed = False
        k = 0
        while k + 1 < len(w):
            s1, s2 = w[k], w[k + 1]
            if s1[0] == "X" and s2[0] == "X" and s1[1] == s2[1] \
                    and s1[2] == -s2[2]:
                del w[k:k + 2]
            elif s1[0] == "W" and s2[0] == "W" and s1[1] == s2[1] \
                    and s1[2] == -s2[2]:
                del w[k:k + 2]
            elif s1[0] == "U" and s2[0] == "A" and s2[1] == s1[1]:
                coeff = coeff * ctx.delta()
                del w[k:k + 2]
            elif s1[0] == "U" and s2[0] == "A" and abs(s2[1] - s1[1]) == 1:
                del w[k:k + 2]
            elif s1[0] == "X" and s2[0] == "A" and s1[1] == s2[1]:
                coeff = coeff * ctx.lam(-s1[2])
                del w[k:k + 1]
            elif s1[0] == "U" and s2[0] == "X" and s1[1] == s2[1]:
                coeff = coeff * ctx.lam(-s2[2])
                del w[k + 1:k + 2]
            else:
                k += 1
                continue
            changed = True
            k = max(k - 1, 0)
    return coeff, tuple(w)


# ---------------------------------------------------------------------------
# the normalizer


def theta_value(ctx: RingContext, w: int) -> RingElem:
    if w == 0:
        return ctx.delta()
    if w > 0:
        return ctx.q(w)
    return ctx.fpoly(-w)


def _kink_sign(ev1: Ev, ev2: Ev) -> int:
    """Writhe sign of a crossing from the directions of its two passes."""
    vec = {("/", 1): (1, 1), ("/", -1): (-1, -1),
           ("\\", 1): (-1, 1), ("\\", -1): (1, -1)}
    over = ev1 if ev1.over else ev2
    under = ev2 if ev1.over else ev1
    xo, yo = vec[(over.shape, over.dirn)]
    xu, yu = vec[(under.shape, under.dirn)]
    cr = xo * yu - yo * xu
    assert cr != 0
    return 1 if cr > 0 else -1


def _remove_slices(word: Word, dead: set[int], trace: TraceResult,
                   dead_comp: int) -> Word:
    """Drop the slices in `dead` (all belonging to component dead_comp) and
    reindex the survivors around the removed strand positions."""
    occ = trace.occupancy
    out: list[Slice] = []
    for k, sl in enumerate(word):
        if k in dead:
            continue
        row = occ[k]
        if sl[0] == "U":
            # cup positions refer to the upper boundary
            row_up = occ[k + 1]
            shift = sum(1 for p in range(sl[1])
                        if p < len(row_up) and row_up[p] == dead_comp)
            out.append(("U", sl[1] - shift))
            continue
        i = sl[1]
        shift = sum(1 for p in range(i) if row[p] == dead_comp)
        out.append((sl[0], i - shift) + sl[2:])
    return tuple(out)


def _loop_shape(comp: Comp) -> str:
    """Classify a closed component for evaluation.

    'expand' - some winding sits at position >= 2, hiding clasp crossings
               with whatever it reaches over; expand it first.
    'busy'   - has crossings (resolved by skein / RI / RII first).
    'gather' - crossing free with windings away from the canonical start.
    'theta'  - crossing free, pole-adjacent windings gathered at the start:
               a literal Theta curve.
    """
    if any(ev.kind == "mark" and ev.pos != 1 for ev in comp.events):
        return "expand"
    if any(ev.kind == "x" for ev in comp.events):
        return "busy"
    lead = True
    for ev in comp.events:
        if ev.kind == "turn":
            lead = False
        elif ev.kind == "mark" and not lead:
            return "gather"
    return "theta"


def _loop_theta(ctx: RingContext, comp: Comp) -> RingElem:
    """Value of a gathered pole-adjacent loop: d, q_w or f_w(q)."""
    w = 0
    for ev in comp.events:
        if ev.kind == "turn":
            break
        assert ev.kind == "mark" and ev.pos == 1
        w += ev.sign
    return theta_value(ctx, w)


def _expand_mark(word: Word, k: int) -> Word:
    """Replace the winding block at slice k by its defining conjugation
    x_j = g_{j-1}..g_1 x_1 g_1..g_{j-1} (all signs follow the block's)."""
    _, j, s = word[k]
    pre = tuple(("X", r, s) for r in range(j - 1, 0, -1))
    post = tuple(("X", r, s) for r in range(1, j))
    return word[:k] + pre + (("W", 1, s),) + post + word[k + 1:]


class _Job:
    __slots__ = ("ctx", "n_bot", "budget", "count")

    def __init__(self, ctx: RingContext, n_bot: int, budget: int):
        self.ctx = ctx
        self.n_bot = n_bot
        self.budget = budget
        self.count = 0


def normalize_word(ctx: RingContext, n_bot: int, word: Word,
                   max_terms: Optional[int] = None
                   ) -> dict[BasisTriple, RingElem]:
    """Reduce a validated engine word to basis-triple coordinates."""
    job = _Job(ctx, n_bot, max_terms or max_terms_default())
    out = _normalize(job, tuple(word))
    return {t: c for t, c in out.items() if not c.is_zero()}


def _normalize(job: _Job, word: Word) -> dict[BasisTriple, RingElem]:
    ctx = job.ctx
    coeff, word = cleanup(ctx, job.n_bot, word)
    memo = ctx.engine_memo.setdefault(job.n_bot, {})
    hit = memo.get(word)
    if hit is None:
        job.count += 1
        if job.count > job.budget:
            raise TermExplosion(f"live-term guard: > {job.budget} words")
        hit = _reduce(job, word)
        memo[word] = hit
    if coeff == ctx.one:
        return hit
    return {t: coeff * c for t, c in hit.items()}


def _combine(job: _Job, branches) -> dict[BasisTriple, RingElem]:
    total: dict[BasisTriple, RingElem] = {}
    ctx = job.ctx
    for scalar, w in branches:
        sub = _normalize(job, w)
        for t, c in sub.items():
            acc = total.get(t)
            total[t] = c * scalar if acc is None else acc + c * scalar
    return {t: c for t, c in total.items() if not c.is_zero()}


def _reduce(job: _Job, word: Word) -> dict[BasisTriple, RingElem]:
    ctx = job.ctx
    trace = trace_word(job.n_bot, word)
    strands = trace.strands()

    # 1. closed loops: literal Theta curves evaluate and vanish; windings
    #    reaching over other strands expand into their defining conjugation
    #    so the hidden clasp crossings are resolved honestly
    for comp in strands:
        if not comp.closed:
            continue
        shape = _loop_shape(comp)
        if shape == "theta":
            val = _loop_theta(ctx, comp)
            dead = {ev.slice_idx for ev in comp.events}
            rest = _remove_slices(word, dead, trace, comp.idx)
            return _combine(job, [(val, rest)])
        if shape == "expand":
            for ev in comp.events:
                if ev.kind == "mark" and ev.pos != 1:
                    return _combine(job, [(ctx.one,
                                           _expand_mark(word, ev.slice_idx))])

    # 2. winding transport toward each strand's initial end
    step = _travel_step(job, word, trace)
    if step is not None:
        return _combine(job, step)

    # 3. totally descending enforcement (Kauffman skein on the first
    #    crossing met as an under-crossing)
    bad = _first_bad_crossing(strands)
    if bad is not None:
        k = bad
        s = word[k][2]
        r = word[k][1]
        switched = word[:k] + (("X", r, -s),) + word[k + 1:]
        smooth_e = word[:k] + (("A", r), ("U", r)) + word[k + 1:]
        smooth_i = word[:k] + word[k + 1:]
        zc = ctx.z_var() * ctx.from_int(s)
        return _combine(job, [(ctx.one, switched), (zc, smooth_e),
                              (-zc, smooth_i)])

    # 4. Reidemeister I / II removal: empty kinks and verified bigons; this
    #    also detaches layered loops from the strands they cross
    move = _kink_or_bigon(job, word, strands)
    if move is not None:
        return _combine(job, move)

    return {_emit(job, word, trace): ctx.one}


def _first_bad_crossing(strands) -> Optional[int]:
    seen: set[int] = set()
    for comp in strands:
        for ev in comp.events:
            if ev.kind != "x":
                continue
            if ev.slice_idx in seen:
                continue
            seen.add(ev.slice_idx)
            if not ev.over:
                return ev.slice_idx
    return None


def _clean_x_pairs(comp: Comp):
    """Pairs of crossing passes separated only by turns along the strand
    (for loops the list is cyclic)."""
    evs = [ev for ev in comp.events if ev.kind != "turn"]
    out = []
    n_ev = len(evs)
    if n_ev < 2:
        return out
    rng = range(n_ev) if comp.closed else range(n_ev - 1)
    for i in rng:
        e1, e2 = evs[i], evs[(i + 1) % n_ev]
        if e1.kind == "x" and e2.kind == "x":
            out.append((e1, e2))
    return out


_STUBS = {("/", 1): ("SW", "NE"), ("/", -1): ("NE", "SW"),
          ("\\", 1): ("SE", "NW"), ("\\", -1): ("NW", "SE")}
_PAR_ARCS = ({"SW", "NW"}, {"SE", "NE"})
_E_ARCS = ({"SW", "SE"}, {"NW", "NE"})


def _contract_kink(ctx: RingContext, word: Word, e1: Ev, e2: Ev):
    """Reidemeister I: replace the crossing by the smoothing that routes the
    strand through its chord (the other smoothing would pinch off a circle)."""
    k = e1.slice_idx
    i = word[k][1]
    p_out = _STUBS[(e1.shape, e1.dirn)][1]
    q_in = _STUBS[(e2.shape, e2.dirn)][0]
    lam = ctx.lam(_kink_sign(e1, e2))
    if {p_out, q_in} in _PAR_ARCS:
        repl = (("A", i), ("U", i))      # parallel smoothing closes the chord
    else:
        repl = ()
    return [(lam, word[:k] + repl + word[k + 1:])]


def _structure_key(n_bot: int, word: Word, exclude: frozenset = frozenset()):
    """Regular-isotopy fingerprint: per component, the ordered sequence of
    marks and crossings (partner component, over/under), skipping `exclude`d
    crossing slices.  Open components are keyed by endpoints."""
    tr = trace_word(n_bot, word)
    comp_key: dict[int, tuple] = {}
    loop_count = 0
    for c in tr.strands():
        if c.closed:
            comp_key[c.idx] = ("loop", loop_count)
            loop_count += 1
        else:
            comp_key[c.idx] = (c.init_vertex, c.term_vertex)
    x_owner: dict[int, list] = {}
    for c in tr.strands():
        for ev in c.events:
            if ev.kind == "x" and ev.slice_idx not in exclude:
                x_owner.setdefault(ev.slice_idx, []).append((c.idx, ev))
    opens = []
    loops = []
    for c in tr.strands():
        seq = []
        for ev in c.events:
            if ev.kind == "mark":
                seq.append(("m", ev.pos, ev.sign, ev.dirn))
            elif ev.kind == "x" and ev.slice_idx not in exclude:
                owners = x_owner[ev.slice_idx]
                (i1, e1), (i2, e2) = owners
                partner = i2 if e1 is ev else i1
                wr = _kink_sign(e1, e2) if i1 == i2 else 0
                seq.append(("x", comp_key[partner], ev.over, wr))
        if c.closed:
            loops.append(tuple(seq))
        else:
            opens.append((comp_key[c.idx], tuple(seq)))
    return tuple(sorted(opens)), tuple(sorted(loops))


def _kink_or_bigon(job: _Job, word: Word, strands):
    ctx = job.ctx
    pairs_by_comp = [(comp, _clean_x_pairs(comp)) for comp in strands]
    for comp, pairs in pairs_by_comp:
        for e1, e2 in pairs:
            if e1.slice_idx == e2.slice_idx and e1 is not e2:
                return _contract_kink(ctx, word, e1, e2)
    # Reidemeister II: two crossings bounding a bigon with a coherent sense;
    # the surgery below is verified to fix every other event, so removal is
    # sound whenever a candidate passes.
    sides: dict[frozenset, list] = {}
    for comp, pairs in pairs_by_comp:
        for e1, e2 in pairs:
            if e1.slice_idx != e2.slice_idx:
                key = frozenset((e1.slice_idx, e2.slice_idx))
                sides.setdefault(key, []).append((e1, e2))
    for key, instances in sides.items():
        for a in range(len(instances)):
            for b in range(a + 1, len(instances)):
                (a1, a2), (b1, b2) = instances[a], instances[b]
                if {id(a1), id(a2)} & {id(b1), id(b2)}:
                    continue
                s1 = {a1.slice_idx: a1.over, a2.slice_idx: a2.over}
                s2 = {b1.slice_idx: b1.over, b2.slice_idx: b2.over}
                if not (len(s1) == 2 and len(s2) == 2
                        and all(s1[k] != s2[k] for k in s1)
                        and len(set(s1.values())) == 1):
                    continue
                repl = _bigon_surgery(job, word, key)
                if repl is not None:
                    return [(ctx.one, repl)]
    return None


def _bigon_surgery(job: _Job, word: Word, key: frozenset):
    """Remove an RII pair, choosing at each crossing the smoothing that
    preserves the rest of the diagram's event structure exactly."""
    k1, k2 = sorted(key)
    before = _structure_key(job.n_bot, word, exclude=key)

    def variants(k):
        i = word[k][1]
        return ((), (("A", i), ("U", i)))

    for r2 in variants(k2):
        for r1 in variants(k1):
            cand = word[:k1] + r1 + word[k1 + 1:k2] + r2 + word[k2 + 1:]
            try:
                if _structure_key(job.n_bot, cand) == before:
                    return cand
            except WordError:
                continue
    return None


# -- winding transport -------------------------------------------------------


def _travel_step(job: _Job, word: Word, trace: TraceResult):
    """One step of moving an out-of-place winding block toward its strand's
    initial end (or a loop's canonical start).  Loop windings never hop
    crossings; a blocked loop winding waits for the skein / RI / RII steps."""
    for comp in trace.strands():
        for ev in _unparked(comp, word, trace):
            step = _step_mark(job, word, ev, loop=comp.closed)
            if step is not None:
                return step
    return None


def _unparked(comp: Comp, word: Word, trace: TraceResult):
    marks = [ev for ev in comp.events if ev.kind == "mark"]
    if not marks:
        return
    if comp.closed:
        # loop windings gather at the canonical start, leading marks first
        lead = True
        for ev in comp.events:
            if ev.kind in ("x", "turn"):
                lead = False
            elif ev.kind == "mark" and not lead:
                yield ev
        return
    # open strand: windings must sit at the word extremity next to the
    # initial vertex, at the initial vertex's position
    n = trace.n_top
    init = comp.init_vertex
    top_initial = init <= n
    init_pos = init if top_initial else trace.n_bot + 1 - (init - n)
    bot_run_end = 0
    while bot_run_end < len(word) and word[bot_run_end][0] == "W":
        bot_run_end += 1
    top_run_start = len(word)
    while top_run_start > 0 and word[top_run_start - 1][0] == "W":
        top_run_start -= 1
    for ev in marks:
        k = ev.slice_idx
        if top_initial and k >= top_run_start and ev.pos == init_pos:
            continue
        if not top_initial and k < bot_run_end and ev.pos == init_pos:
            continue
        yield ev


def _step_mark(job: _Job, word: Word, ev: Ev, loop: bool = False):
    """Move one winding block one slice toward its strand's initial end.

    Moving against the traversal direction: a mark passed upward moves down
    the word, one passed downward moves up.  All rewrites are the verbatim
    identities; non-exact crossings spawn the two Kauffman smoothings.  Loop
    windings never cross a crossing (returns None: blocked)."""
    ctx = job.ctx
    k = ev.slice_idx
    j, s = ev.pos, ev.sign
    move_down = ev.dirn == +1
    nb_idx = k - 1 if move_down else k + 1
    if nb_idx < 0 or nb_idx >= len(word):
        raise EngineEscalation("winding ran off the word while traveling")
    nb = word[nb_idx]
    lo, hi = (nb_idx, k) if move_down else (k, nb_idx)

    def splice(repl: list[Slice]) -> Word:
        return word[:lo] + tuple(repl) + word[hi + 1:]

    wsl = ("W", j, s)
    kind = nb[0]
    if kind == "W":
        return [(ctx.one, splice([wsl, nb] if move_down else [nb, wsl]))]

    if kind == "X":
        r, sg = nb[1], nb[2]
        if j not in (r, r + 1):
            return [(ctx.one, splice([wsl, nb] if move_down else [nb, wsl]))]
        if loop:
            return None
        j2 = r + 1 if j == r else r
        exact = (sg == s) if j == r else (sg == -s)
        hopped = ("W", j2, s)
        if move_down:
            main = [hopped, ("X", r, -sg if exact else sg)]
            stay_e = [("A", r), ("U", r), wsl]
            stay_i = [wsl]
        else:
            main = [("X", r, -sg if exact else sg), hopped]
            stay_e = [wsl, ("A", r), ("U", r)]
            stay_i = [wsl]
        if exact:
            return [(ctx.one, splice(main))]
        zc = ctx.z_var() * ctx.from_int(sg)
        return [(ctx.one, splice(main)), (zc, splice(stay_e)),
                (-zc, splice(stay_i))]

    if kind == "A":
        i = nb[1]
        if move_down:
            # mark above a cap: commute; below the cap indices >= i shift up
            nj = j + 2 if j >= i else j
            return [(ctx.one, splice([("W", nj, s), nb]))]
        if j in (i, i + 1):
            j2 = i + 1 if j == i else i
            return [(ctx.lam(-2 * s), splice([("W", j2, -s), nb]))]
        nj = j - 2 if j > i + 1 else j
        return [(ctx.one, splice([nb, ("W", nj, s)]))]

    if kind == "U":
        i = nb[1]
        if not move_down:
            nj = j + 2 if j >= i else j
            return [(ctx.one, splice([nb, ("W", nj, s)]))]
        if j in (i, i + 1):
            j2 = i + 1 if j == i else i
            return [(ctx.lam(-2 * s), splice([nb, ("W", j2, -s)]))]
        nj = j - 2 if j > i + 1 else j
        return [(ctx.one, splice([("W", nj, s), nb]))]

    raise AssertionError(f"unexpected neighbor {nb}")


# -- emission -----------------------------------------------------------------


def _emit(job: _Job, word: Word, trace: TraceResult) -> BasisTriple:
    n = job.n_bot
    if trace.n_top != n:
        raise EngineEscalation("emission requires a square word")
    mu = [0] * n
    nu = [0] * n
    pairs = []
    for comp in trace.strands():
        if comp.closed:
            raise EngineEscalation("closed loop survived to emission")
        if any(ev.kind == "pole" for ev in comp.events):
            raise EngineEscalation("raw pole crossing survived to emission")
        xs = [ev.slice_idx for ev in comp.events if ev.kind == "x"]
        if len(xs) != len(set(xs)):
            raise EngineEscalation("self-crossing survived to emission")
        total = sum(ev.sign for ev in comp.events if ev.kind == "mark")
        a, b = sorted((comp.init_vertex, comp.term_vertex))
        pairs.append((a, b))
        if total:
            init = comp.init_vertex
            if init <= n:
                nu[init - 1] = total
            else:
                mu[2 * n + 1 - init - 1] = total
    t = BasisTriple(n, tuple(mu), tuple(sorted(pairs)), tuple(nu))
    check_triple(t)
    return t
