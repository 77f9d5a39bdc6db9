"""torus_skein: exact affine BMW / Kauffman tangle algebra engine."""

from .ring import RingContext, RingElem, QIndexOverflow, parse_ring, format_ring

__all__ = [
    "RingContext",
    "RingElem",
    "QIndexOverflow",
    "parse_ring",
    "format_ring",
]
