"""Prime-field arithmetic and MDS masking matrices.

The masking matrix used by the secure-network-coding schemes is the
generator matrix of a Reed-Solomon code over GF(p): a Vandermonde matrix
whose ``j`` rows are the powers ``0..j-1`` of ``k`` distinct evaluation
points.  Any ``j`` of its columns are linearly independent over GF(p), and
therefore also over the reals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

import numpy as np

__all__ = [
    "GeneratorMatrix",
    "build_mds_generator",
    "det_mod_p",
    "integer_det",
    "is_prime",
    "smallest_prime_geq",
    "verify_mds",
]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, isqrt(n) + 1, 2))


def smallest_prime_geq(k: int) -> int:
    """Return the least prime ``p >= k`` (2 for ``k <= 2``)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    p = max(k, 2)
    while not is_prime(p):
        p += 1
    return p


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """A ``j x k`` integer matrix over GF(p) with the MDS property.

    Parameters
    ----------
    entries : ndarray of int, shape (j, k)
        Matrix entries, each in ``[0, p)``.
    p : int
        Field prime.
    """

    entries: np.ndarray
    p: int

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.int64, copy=True)
        if arr.ndim != 2:
            raise ValueError("generator entries must be a 2-D array")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def j(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def column_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def __repr__(self):
        return f"GeneratorMatrix(j={self.j}, k={self.k}, p={self.p}, entries={self.entries.tolist()})"


@lru_cache(maxsize=None)
def build_mds_generator(j: int, k: int) -> GeneratorMatrix:
    """Vandermonde generator of a ``[k, j]`` Reed-Solomon code over GF(p).

    Row ``r`` and column ``c`` hold ``c**r mod p`` for evaluation points
    ``c = 0..k-1``, with ``0**0 = 1``; ``p`` is the smallest prime ``>= k``.
    """
    if j < 1 or k < 1:
        raise ValueError(f"j and k must be positive, got j={j}, k={k}")
    if j > k:
        raise ValueError(f"MDS generator needs j <= k, got j={j}, k={k}")
    p = smallest_prime_geq(k)
    entries = [[pow(c, r, p) for c in range(k)] for r in range(j)]
    return GeneratorMatrix(np.array(entries, dtype=np.int64), p)


def det_mod_p(rows, p: int) -> int:
    """Determinant of a square integer matrix over GF(p), in ``[0, p)``."""
    a = [[int(x) % p for x in row] for row in rows]
    n = len(a)
    det = 1
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col]), None)
        if pivot is None:
            return 0
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det = det * a[col][col] % p
        inv = pow(a[col][col], p - 2, p)
        for r in range(col + 1, n):
            f = a[r][col] * inv % p
            if f:
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[col])]
    return det % p


def integer_det(rows) -> int:
    """Exact determinant of a square integer matrix (fraction-free Bareiss)."""
    a = [[int(x) for x in row] for row in rows]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for col in range(n - 1):
        if a[col][col] == 0:
            swap = next((r for r in range(col + 1, n) if a[r][col]), None)
            if swap is None:
                return 0
            a[col], a[swap] = a[swap], a[col]
            sign = -sign
        for r in range(col + 1, n):
            for c in range(col + 1, n):
                a[r][c] = (a[r][c] * a[col][col] - a[r][col] * a[col][c]) // prev
        prev = a[col][col]
    return sign * a[n - 1][n - 1]


def verify_mds(g: GeneratorMatrix) -> bool:
    """Exhaustively check that every ``j``-subset of columns is nonsingular mod p.

    Raises
    ------
    ValueError
        If any entry lies outside ``[0, p)``.
    """
    e = g.entries
    if e.size and (e.min() < 0 or e.max() >= g.p):
        raise ValueError(f"generator entries must lie in [0, {g.p})")
    cols = e.T.tolist()
    for subset in itertools.combinations(range(g.k), g.j):
        sub = [[cols[c][r] for c in subset] for r in range(g.j)]
        if det_mod_p(sub, g.p) == 0:
            return False
    return True
