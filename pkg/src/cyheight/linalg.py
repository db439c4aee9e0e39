"""Exact linear algebra over F_p.

Everything here works on dense ``int64`` arrays with entries in ``[0, p)``.
The elimination kernel is the hot loop of the whole package; it is compiled
with numba unless ``CYHEIGHT_NO_NUMBA=1`` is set, in which case a vectorised
numpy version runs instead.  Both produce identical results.
"""
from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit


def _inverse_table(p: int) -> np.ndarray:
    inv = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        inv[a] = pow(a, -1, p)
    return inv


@njit
def _echelon_numba(M, p, inv, reduce_full):
    rows, cols = M.shape
    pivots = np.empty(min(rows, cols), dtype=np.int64)
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = -1
        for i in range(r, rows):
            if M[i, c] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for k in range(c, cols):
                tmp = M[r, k]
                M[r, k] = M[piv, k]
                M[piv, k] = tmp
        s = inv[M[r, c]]
        if s != 1:
            for k in range(c, cols):
                M[r, k] = (M[r, k] * s) % p
        start = 0 if reduce_full else r + 1
        for i in range(start, rows):
            if i == r:
                continue
            a = M[i, c]
            if a != 0:
                a = p - a
                for k in range(c, cols):
                    if M[r, k] != 0:
                        M[i, k] = (M[i, k] + a * M[r, k]) % p
        pivots[r] = c
        r += 1
    return pivots[:r]


def _echelon_numpy(M, p, inv, reduce_full):
    rows, cols = M.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(M[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            M[[r, piv], c:] = M[[piv, r], c:]
        s = inv[M[r, c]]
        if s != 1:
            M[r, c:] = (M[r, c:] * s) % p
        col = M[:, c].copy()
        col[r] = 0
        if not reduce_full:
            col[:r] = 0
        hit = np.nonzero(col)[0]
        if hit.size:
            M[hit, c:] = (M[hit, c:] - np.outer(col[hit], M[r, c:])) % p
        pivots.append(c)
        r += 1
    return np.asarray(pivots, dtype=np.int64)


def _echelon(M: np.ndarray, p: int, reduce_full: bool) -> np.ndarray:
    inv = _inverse_table(p)
    if USE_NUMBA:
        return _echelon_numba(M, np.int64(p), inv, reduce_full)
    return _echelon_numpy(M, p, inv, reduce_full)


def as_modp(A, p: int) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(A, dtype=np.int64) % p)


def rank_mod_p(A, p: int) -> int:
    """Rank of ``A`` over F_p."""
    M = as_modp(A, p)
    if M.size == 0:
        return 0
    # drop zero rows/columns first; cheap and often substantial
    M = M[np.any(M, axis=1)]
    M = M[:, np.any(M, axis=0)]
    if M.size == 0:
        return 0
    if M.shape[0] > M.shape[1]:
        M = np.ascontiguousarray(M.T)
    return int(_echelon(M, p, False).size)


def rref_mod_p(A, p: int):
    """Reduced row echelon form; returns ``(R, pivot_columns)``."""
    M = as_modp(A, p).copy()
    if M.size == 0:
        return M, np.zeros(0, dtype=np.int64)
    piv = _echelon(M, p, True)
    return M[: piv.size], piv


def nullspace_mod_p(A, p: int) -> np.ndarray:
    """Basis of the right kernel, as the columns of the returned matrix."""
    A = as_modp(A, p)
    n = A.shape[1]
    R, piv = rref_mod_p(A, p)
    free = np.setdiff1d(np.arange(n), piv)
    K = np.zeros((n, free.size), dtype=np.int64)
    for j, fc in enumerate(free):
        K[fc, j] = 1
        K[piv, j] = (-R[:, fc]) % p
    return K


def solve_mod_p(A, b, p: int):
    """One solution of ``A x = b`` over F_p, or ``None`` when inconsistent."""
    A = as_modp(A, p)
    b = as_modp(b, p).reshape(-1)
    m, n = A.shape
    aug = np.concatenate([A, b[:, None]], axis=1)
    R, piv = rref_mod_p(aug, p)
    if piv.size and piv[-1] == n:
        return None
    x = np.zeros(n, dtype=np.int64)
    x[piv] = R[:, n]
    return x


def column_basis(A, p: int) -> np.ndarray:
    """Indices of a maximal independent subset of the columns of ``A``."""
    A = as_modp(A, p)
    if A.size == 0:
        return np.zeros(0, dtype=np.int64)
    M = A.copy()
    return _echelon(M, p, False)
