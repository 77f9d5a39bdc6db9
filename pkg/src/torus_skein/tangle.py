"""
tangle: the public word layer over the engine.

A TangleWord is a sequence of elementary slices listed from the bottom of the
diagram upward; the flagpole occupies position 0.  This module provides
validation, strand tracing (footnote windings, writhes, crossing lists), the
three normalizer stages as spec'd operations, word serialization and the
diagram symmetries alpha / beta / rho.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import engine
from .engine import (BasisTriple, EngineEscalation, PoleCapture,
                     PoleDisplaced, Slice, TermExplosion, Word, WordError)
from .ring import RingContext, RingElem


@dataclass(frozen=True)
class TangleWord:
    """(n_top, n_bottom) affine tangle word; slices run bottom to top."""

    n_top: int
    n_bottom: int
    slices: Word

    def __post_init__(self):
        widths = engine.word_widths(self.n_bottom, self.slices)
        if widths[-1] - 1 != self.n_top:
            raise WordError(
                f"word ends at {widths[-1] - 1} strands, declared {self.n_top}")

    def __add__(self, other: "TangleWord") -> "TangleWord":
        if other.n_bottom != self.n_top:
            raise WordError("boundary mismatch in concatenation")
        return TangleWord(other.n_top, self.n_bottom,
                          self.slices + other.slices)

    def __str__(self) -> str:
        return format_word(self)


def square(n: int, slices) -> TangleWord:
    return TangleWord(n, n, tuple(slices))


# generator words ------------------------------------------------------------


def word_g(n: int, i: int, sign: int = 1) -> TangleWord:
    return square(n, [("X", i, sign)])


def word_e(n: int, i: int) -> TangleWord:
    return square(n, [("A", i), ("U", i)])


def word_x1(n: int, sign: int = 1) -> TangleWord:
    return square(n, [("X", 0, sign), ("X", 0, sign)])


def word_identity(n: int) -> TangleWord:
    return square(n, [])


def word_closure(w: TangleWord) -> TangleWord:
    """cl_n: close the rightmost strand of a square word around the right."""
    n = w.n_top
    if w.n_bottom != n or n < 1:
        raise WordError("closure needs a square word with n >= 1")
    slices = (("U", n),) + w.slices + (("A", n),)
    return TangleWord(n - 1, n - 1, slices)


# validation / tracing --------------------------------------------------------


def word_validate(w: TangleWord) -> None:
    """Widths must bookkeep and the pole must stay monotone: it meets no
    cap/cup and returns to position 0."""
    engine.validate_word(w.n_bottom, w.slices)


@dataclass
class StrandTrace:
    """Per-component traversal summary in the standard orientation."""

    closed: bool
    endpoints: Optional[tuple[int, int]]    # (initial, terminal) vertex ids
    pole_signs: list[int]                   # +1 over, -1 under, in order
    winding: int
    self_writhe: int
    crossings: list[tuple[int, bool, int]]  # (slice, over?, braid sign)


def _footnote(signs: list[int]) -> int:
    stack: list[int] = []
    for s in signs:
        if stack and stack[-1] == s:
            stack.pop()
        else:
            stack.append(s)
    if not stack:
        return 0
    return (len(stack) // 2) * stack[0]


def trace_strands(w: TangleWord) -> list[StrandTrace]:
    """Component decomposition with footnote windings and self-writhes."""
    word_validate(w)
    tr = engine.trace_word(w.n_bottom, w.slices)
    out = []
    for comp in tr.strands():
        pole: list[int] = []
        crossings = []
        passes: dict[int, engine.Ev] = {}
        writhe = 0
        for ev in comp.events:
            if ev.kind == "pole":
                pole.append(1 if ev.over else -1)
            elif ev.kind == "mark":
                s = ev.sign
                pole.extend([s, -s] if ev.dirn == -1 else [-s, s])
            elif ev.kind == "x":
                crossings.append((ev.slice_idx, ev.over, ev.sign))
                if ev.slice_idx in passes:
                    writhe += engine._kink_sign(passes[ev.slice_idx], ev)
                else:
                    passes[ev.slice_idx] = ev
        ends = None if comp.closed else (comp.init_vertex, comp.term_vertex)
        out.append(StrandTrace(comp.closed, ends, pole, _footnote(pole),
                               writhe, crossings))
    return out


def word_is_descending(w: TangleWord) -> bool:
    tr = engine.trace_word(w.n_bottom, w.slices)
    return engine._first_bad_crossing(tr.strands()) is None


# the three stages ------------------------------------------------------------


def make_descending(ctx: RingContext, w: TangleWord
                    ) -> list[tuple[RingElem, TangleWord]]:
    """Stage A: resolve every crossing first met as an under-crossing with
    the Kauffman skein relation.  Flagpole crossings are never touched."""
    word_validate(w)
    guard = engine.max_terms_default()
    done: list[tuple[RingElem, Word]] = []
    todo: list[tuple[RingElem, Word]] = [(ctx.one, w.slices)]
    seen = 0
    while todo:
        coeff, word = todo.pop()
        seen += 1
        if seen > guard:
            raise TermExplosion("make_descending exceeded the term guard")
        tr = engine.trace_word(w.n_bottom, word)
        k = engine._first_bad_crossing(tr.strands())
        if k is None:
            done.append((coeff, word))
            continue
        r, s = word[k][1], word[k][2]
        z = ctx.z_var() * ctx.from_int(s)
        todo.append((coeff, word[:k] + (("X", r, -s),) + word[k + 1:]))
        todo.append((coeff * z, word[:k] + (("A", r), ("U", r)) + word[k + 1:]))
        todo.append((coeff * -z, word[:k] + word[k + 1:]))
    return [(c, TangleWord(w.n_top, w.n_bottom, word)) for c, word in done]


def evaluate_closed_loops(ctx: RingContext, w: TangleWord
                          ) -> tuple[RingElem, TangleWord]:
    """Stage B: remove every closed component of a totally descending word.

    Loops whose resolution needs the skein relation (windings trapped inside
    a self-crossing chord) raise EngineEscalation; see the decisions ledger.
    """
    word_validate(w)
    word = engine.to_engine_word(w.slices)
    coeff = ctx.one
    while True:
        c2, word = engine.cleanup(ctx, w.n_bottom, word)
        coeff = coeff * c2
        tr = engine.trace_word(w.n_bottom, word)
        strands = tr.strands()
        loops = [c for c in strands if c.closed]
        if not loops:
            break
        comp = loops[0]
        if all(ev.kind != "x" for ev in comp.events):
            coeff = coeff * engine._loop_theta(ctx, comp)
            dead = {ev.slice_idx for ev in comp.events}
            word = engine._remove_slices(word, dead, tr, comp.idx)
            continue
        if engine._first_bad_crossing(strands) is not None:
            raise EngineEscalation(
                "loop extraction requires a totally descending word")
        move = engine._kink_or_bigon(
            engine._Job(ctx, w.n_bottom, engine.max_terms_default()),
            word, strands)
        if move is None:
            raise EngineEscalation(
                "closed loop needs skein resolution; use normalize()")
        (scal, word), = move
        coeff = coeff * scal
    rest = engine.from_engine_word(word)
    return coeff, TangleWord(w.n_top, w.n_bottom, rest)


def transport_windings(ctx: RingContext, w: TangleWord
                       ) -> tuple[RingElem, BasisTriple]:
    """Stage C: slide each strand's winding to its initial endpoint.

    Returns the single (coefficient, triple) when the input reduces to one
    basis term; transports across under-crossings can spawn skein terms, in
    which case EngineEscalation reports the full expansion size.
    """
    res = normalize(ctx, w)
    if len(res) != 1:
        raise EngineEscalation(
            f"transport produced {len(res)} basis terms; use normalize()")
    (t, c), = res.items()
    return c, t


def normalize(ctx: RingContext, w: TangleWord,
              max_terms: Optional[int] = None) -> dict[BasisTriple, RingElem]:
    """Reduce a square word to basis-triple coordinates (all three stages)."""
    if w.n_top != w.n_bottom:
        raise WordError("normalize needs a square word")
    word_validate(w)
    return engine.normalize_word(ctx, w.n_bottom,
                                 engine.to_engine_word(w.slices), max_terms)


# symmetries -------------------------------------------------------------------


def apply_alpha(w: TangleWord) -> TangleWord:
    flipped = []
    for sl in reversed(w.slices):
        if sl[0] == "A":
            flipped.append(("U", sl[1]))
        elif sl[0] == "U":
            flipped.append(("A", sl[1]))
        else:
            flipped.append(sl)
    return TangleWord(w.n_bottom, w.n_top, tuple(flipped))


def apply_beta(ctx: RingContext, w: TangleWord
               ) -> tuple[TangleWord, dict[str, RingElem]]:
    """Reverse all crossings; the accompanying ring reparameterization sends
    l -> l^{-1}, z -> -z and q_r -> f_r(q_1..q_r)."""
    flipped = tuple((sl[0], sl[1], -sl[2]) if sl[0] in ("X", "W") else sl
                    for sl in w.slices)
    desc: dict[str, RingElem] = {"l": ctx.lam(-1), "z": -ctx.z_var(),
                                 "d": ctx.delta()}
    for r in range(1, ctx.q_index_bound + 1):
        desc[f"q{r}"] = ctx.fpoly(r)
    return TangleWord(w.n_top, w.n_bottom, flipped), desc


def apply_rho(w: TangleWord) -> TangleWord:
    """Left-right mirror for flagpole-free words: position p -> (width-1) - p
    among the ordinary strands, generator indices i -> n - i."""
    widths = engine.word_widths(w.n_bottom, w.slices)
    out = []
    for k, sl in enumerate(w.slices):
        m = widths[k]
        kind = sl[0]
        if kind == "X":
            if sl[1] == 0:
                raise WordError("rho is defined for flagpole-free words only")
            out.append(("X", m - 1 - sl[1], sl[2]))
        elif kind == "A":
            out.append(("A", m - 1 - sl[1]))
        elif kind == "U":
            out.append(("U", m + 1 - sl[1]))
        else:
            raise WordError("rho is defined for flagpole-free words only")
    return TangleWord(w.n_top, w.n_bottom, tuple(out))


def apply_symmetry(ctx: RingContext, kind: str, w: TangleWord):
    if kind == "alpha":
        return apply_alpha(w)
    if kind == "beta":
        return apply_beta(ctx, w)
    if kind == "rho":
        return apply_rho(w)
    raise ValueError(f"unknown symmetry {kind!r}")


# serialization ----------------------------------------------------------------

_TOKEN = re.compile(r"C([+-])(\d+)|CAP(\d+)|CUP(\d+)|n=(\d+)")


def format_word(w: TangleWord) -> str:
    toks = [f"n={w.n_bottom}"]
    for sl in engine.from_engine_word(w.slices):
        if sl[0] == "X":
            toks.append(f"C{'+' if sl[2] > 0 else '-'}{sl[1]}")
        elif sl[0] == "A":
            toks.append(f"CAP{sl[1]}")
        else:
            toks.append(f"CUP{sl[1]}")
    return " ".join(toks)


def parse_word(text: str) -> TangleWord:
    n_bot = None
    slices: list[Slice] = []
    for raw in text.split():
        m = _TOKEN.fullmatch(raw)
        if not m:
            raise WordError(f"bad word token {raw!r}")
        if m.group(5) is not None:
            n_bot = int(m.group(5))
        elif m.group(1) is not None:
            slices.append(("X", int(m.group(2)), 1 if m.group(1) == "+" else -1))
        elif m.group(3) is not None:
            slices.append(("A", int(m.group(3))))
        else:
            slices.append(("U", int(m.group(4))))
    if n_bot is None:
        raise WordError("missing n=<k> header")
    widths = engine.word_widths(n_bot, tuple(slices))
    return TangleWord(widths[-1] - 1, n_bot, tuple(slices))
