"""Pair-index combinatorics for N-particle relative coordinates.

A pair ``(hi, lo)`` with ``1 <= lo < hi <= N`` labels the relative coordinate
``(z[hi] - z[lo]) / sqrt(2)``. Particle labels are 1-based throughout the
public API; the cached index arrays are 0-based for direct numpy indexing.

The canonical order of all pairs is ascending lexicographic in ``(lo, hi)``::

    N=4: (2,1) (3,1) (4,1) (3,2) (4,2) (4,3)

so pairs sharing a lower index form one contiguous block, ordered by ``hi``.
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import IndexPairError, InvalidDimensionError


class IndexPair(NamedTuple):
    hi: int
    lo: int

    def __str__(self):
        return f"({self.hi},{self.lo})"

    @property
    def label(self) -> str:
        return f"r{self.hi}_{self.lo}"


def check_n(n: int, minimum: int = 2) -> int:
    if isinstance(n, bool) or int(n) != n or n < minimum:
        raise InvalidDimensionError(f"particle count must be an integer >= {minimum}, got {n!r}")
    return int(n)


def check_pair(p, n: int | None = None) -> IndexPair:
    hi, lo = p
    if not (1 <= lo < hi):
        raise IndexPairError(f"invalid pair {tuple(p)}: need 1 <= lo < hi")
    if n is not None and hi > n:
        raise IndexPairError(f"pair {tuple(p)} out of range for N={n}")
    return IndexPair(int(hi), int(lo))


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


@lru_cache(maxsize=None)
def _pairs(n: int) -> tuple[IndexPair, ...]:
    return tuple(IndexPair(hi, lo) for lo in range(1, n) for hi in range(lo + 1, n + 1))


def enumerate_pairs(n: int) -> list[IndexPair]:
    """All N(N-1)/2 pairs in canonical order."""
    return list(_pairs(check_n(n)))


def adjacent_pairs(n: int) -> list[IndexPair]:
    return [IndexPair(k + 1, k) for k in range(1, check_n(n))]


def pair_index(p, n: int) -> int:
    """Position of ``p`` in ``enumerate_pairs(n)``."""
    hi, lo = check_pair(p, n)
    # pairs with a smaller lower index come first: (n-1) + (n-2) + ... + (n-lo+1)
    return (lo - 1) * n - (lo - 1) * lo // 2 + (hi - lo - 1)


@lru_cache(maxsize=None)
def _pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    pairs = _pairs(n)
    hi = np.array([p.hi - 1 for p in pairs], dtype=np.intp)
    lo = np.array([p.lo - 1 for p in pairs], dtype=np.intp)
    hi.setflags(write=False)
    lo.setflags(write=False)
    return hi, lo


def pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based ``(hi, lo)`` particle indices for every pair, canonical order."""
    return _pair_arrays(check_n(n))


@lru_cache(maxsize=None)
def _adjacent_positions(n: int) -> np.ndarray:
    pos = np.array([pair_index((k + 1, k), n) for k in range(1, n)], dtype=np.intp)
    pos.setflags(write=False)
    return pos


def adjacent_positions(n: int) -> np.ndarray:
    """Positions of (2,1), (3,2), ..., (N,N-1) inside the canonical pair order."""
    return _adjacent_positions(check_n(n))


def sigma(p, n: int) -> np.ndarray:
    """Signed incidence vector: +1 at ``hi``, -1 at ``lo``, zero elsewhere."""
    hi, lo = check_pair(p, check_n(n))
    s = np.zeros(n, dtype=np.int64)
    s[hi - 1] = 1
    s[lo - 1] = -1
    return s


def sigma_dot(p, q) -> int:
    """``sigma(p) . sigma(q)`` from index coincidences alone."""
    a, b = check_pair(p)
    c, d = check_pair(q)
    return (a == c) - (a == d) - (b == c) + (b == d)


def oplus(p, q) -> IndexPair:
    """Compose two chaining pairs: ``(i', i) + (i, j) -> (i', j)``.

    Symmetric in its arguments. Raises ``IndexPairError`` if neither pair's
    lower index is the other's upper index.
    """
    p = check_pair(p)
    q = check_pair(q)
    if p.lo == q.hi:
        return IndexPair(p.hi, q.lo)
    if q.lo == p.hi:
        return IndexPair(q.hi, p.lo)
    raise IndexPairError(f"pairs {p} and {q} do not chain")


def vee_wedge(i: int, j: int) -> IndexPair:
    """The pair ``(max(i, j), min(i, j))`` for particles ``i != j``."""
    if i == j:
        raise IndexPairError(f"vee_wedge needs distinct particles, got {i} twice")
    if min(i, j) < 1:
        raise IndexPairError(f"particle labels are 1-based, got ({i}, {j})")
    return IndexPair(max(i, j), min(i, j))


def contributing_pairs(p, n: int) -> list[IndexPair]:
    """Pairs ``q`` with ``sigma(p) . sigma(q) != 0``, built by construction.

    The set is ``{p}`` together with every pair through ``p.hi`` and every
    pair through ``p.lo``. Returned in canonical order.
    """
    hi, lo = check_pair(p, check_n(n))
    found = {IndexPair(hi, lo)}
    found.update(vee_wedge(hi, j) for j in range(1, n + 1) if j != hi)
    found.update(vee_wedge(lo, j) for j in range(1, n + 1) if j != lo)
    return sorted(found, key=lambda q: (q.lo, q.hi))


@lru_cache(maxsize=None)
def _incidence(n: int) -> np.ndarray:
    hi, lo = _pair_arrays(n)
    s = np.zeros((len(hi), n))
    rows = np.arange(len(hi))
    s[rows, hi] = 1.0
    s[rows, lo] = -1.0
    s.setflags(write=False)
    return s


def incidence_matrix(n: int) -> np.ndarray:
    """Float matrix whose rows are ``sigma(p)`` for pairs in canonical order."""
    return _incidence(check_n(n))


@lru_cache(maxsize=None)
def _chain_triples(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    first, second, composed = [], [], []
    for j in range(1, n + 1):
        for m in range(j + 1, n + 1):
            for top in range(m + 1, n + 1):
                first.append(pair_index((top, m), n))
                second.append(pair_index((m, j), n))
                composed.append(pair_index((top, j), n))
    out = tuple(np.array(x, dtype=np.intp) for x in (first, second, composed))
    for arr in out:
        arr.setflags(write=False)
    return out


def chain_triples(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Position arrays ``(a, b, c)`` with ``pair[a] (+) pair[b] == pair[c]``.

    Covers every chaining combination ``(i', m), (m, j)`` exactly once.
    """
    return _chain_triples(check_n(n))
