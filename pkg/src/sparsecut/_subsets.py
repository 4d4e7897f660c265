"""Vectorised tables over all vertex subsets (bitmasks) of a small graph."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .graph import Graph


class SubsetTable:
    """Boundary size, cardinality and volume for every mask ``0 .. 2**n - 1``."""

    def __init__(self, g: Graph, limit: int = 22):
        if g.n > limit:
            raise ValueError(f"n={g.n} exceeds the exhaustive limit {limit}")
        self.g = g
        self.n = g.n
        self.masks = np.arange(1 << g.n, dtype=np.int64)
        self.sizes = np.bitwise_count(self.masks).astype(np.int64)
        bnd = np.zeros(1 << g.n, dtype=np.int64)
        vol = np.zeros(1 << g.n, dtype=np.int64)
        for u, v, k in g.edges():
            bu = (self.masks >> u) & 1
            if u == v:
                vol += 2 * k * bu
                continue
            bv = (self.masks >> v) & 1
            bnd += k * (bu ^ bv)
            vol += k * (bu + bv)
        self.boundary = bnd
        self.volume = vol

    def count_in(self, subset) -> np.ndarray:
        """Number of elements of ``subset`` contained in each mask."""
        m = to_mask(subset)
        return np.bitwise_count(self.masks & m).astype(np.int64)


def to_mask(vertices) -> int:
    m = 0
    for v in vertices:
        m |= 1 << int(v)
    return m


def from_mask(mask: int) -> frozenset[int]:
    out = []
    v = 0
    mask = int(mask)
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return frozenset(out)


def lex_key(mask: int) -> tuple[int, ...]:
    return tuple(sorted(from_mask(mask)))


def argmin_ratio(num: np.ndarray, den: np.ndarray, valid: np.ndarray):
    """Exact minimum of ``num/den`` over ``valid`` masks; ties broken by lexicographic vertex tuple.

    Returns ``(Fraction, mask)`` or ``(None, None)`` if nothing is valid.
    """
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        return None, None
    ratio = num[idx] / den[idx]
    best = ratio.min()
    near = idx[ratio <= best + 1e-9 * max(1.0, abs(best))]
    exact = [(Fraction(int(num[i]), int(den[i])), i) for i in near]
    low = min(f for f, _ in exact)
    ties = [int(i) for f, i in exact if f == low]
    pick = min(ties, key=lex_key)
    return low, pick
