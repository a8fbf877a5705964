"""Dense GF(2) linear algebra used as an independent oracle in tests."""

from __future__ import annotations

import numpy as np


def circulant(Q: int, support) -> np.ndarray:
    """Q x Q binary circulant with the given first-row support.

    Entry (r, s) is 1 iff (s - r) mod Q lies in the support, matching the
    row-shift convention of the polynomial representation.
    """
    m = np.zeros((Q, Q), dtype=np.uint8)
    for e in support:
        for r in range(Q):
            m[r, (r + e) % Q] = 1
    return m


def block_matrix(Q: int, poly_rows) -> np.ndarray:
    """Expand a matrix of supports into its dense binary block matrix."""
    return np.block([[circulant(Q, sup) for sup in row] for row in poly_rows]) % 2


def rref(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2); returns (matrix, pivot columns)."""
    m = mat.copy() % 2
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        pivot = None
        for rr in range(r, rows):
            if m[rr, c]:
                pivot = rr
                break
        if pivot is None:
            continue
        m[[r, pivot]] = m[[pivot, r]]
        for rr in range(rows):
            if rr != r and m[rr, c]:
                m[rr] ^= m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def nullspace(mat: np.ndarray) -> np.ndarray:
    """Basis (rows) of the right null space over GF(2)."""
    m, pivots = rref(mat)
    cols = mat.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(cols, dtype=np.uint8)
        v[f] = 1
        for r, p in enumerate(pivots):
            if m[r, f]:
                v[p] = 1
        basis.append(v)
    return np.array(basis, dtype=np.uint8) if basis else np.zeros((0, cols), dtype=np.uint8)


def row_space_equal(a: np.ndarray, b: np.ndarray) -> bool:
    ra, _ = rref(a)
    rb, _ = rref(b)
    ra = ra[~np.all(ra == 0, axis=1)]
    rb = rb[~np.all(rb == 0, axis=1)]
    return ra.shape == rb.shape and np.array_equal(ra, rb)


def span(basis: np.ndarray) -> set[bytes]:
    """All vectors of a small span, as bytes (for set comparison)."""
    k, n = basis.shape
    out = set()
    for mask in range(1 << k):
        v = np.zeros(n, dtype=np.uint8)
        for i in range(k):
            if (mask >> i) & 1:
                v ^= basis[i]
        out.add(v.tobytes())
    return out
