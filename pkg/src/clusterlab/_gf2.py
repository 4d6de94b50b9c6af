"""Small dense GF(2) linear algebra on uint8 matrices.

Used for the structural searches on stabilizer groups (restricting to a
subsystem, finding group elements with prescribed support or commutation
pattern).  Sizes there are a few hundred rows, so plain dense elimination
is plenty.
"""

from __future__ import annotations

import numpy as np


def rref(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of a GF(2) matrix, plus pivot columns."""
    a = (np.asarray(mat, dtype=np.uint8) & 1).copy()
    if a.ndim != 2:
        raise ValueError("rref expects a 2D matrix")
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        mask = a[:, c].astype(bool)
        mask[r] = False
        a[mask] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution of ``a @ x = b`` over GF(2), or None if inconsistent."""
    a = np.asarray(a, dtype=np.uint8) & 1
    b = (np.asarray(b, dtype=np.uint8) & 1).reshape(-1, 1)
    aug, pivots = rref(np.hstack([a, b]))
    cols = a.shape[1]
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=np.uint8)
    for r, c in enumerate(pivots):
        x[c] = aug[r, cols]
    return x


def nullspace(a: np.ndarray) -> np.ndarray:
    """Basis of the kernel of ``a`` over GF(2), one vector per row."""
    a = np.asarray(a, dtype=np.uint8) & 1
    red, pivots = rref(a)
    cols = a.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for r, c in enumerate(pivots):
            basis[k, c] = red[r, f]
    return basis


def in_rowspace(a: np.ndarray, v: np.ndarray) -> bool:
    red, pivots = rref(a)
    w = (np.asarray(v, dtype=np.uint8) & 1).copy()
    for r, c in enumerate(pivots):
        if w[c]:
            w ^= red[r]
    return not w.any()
