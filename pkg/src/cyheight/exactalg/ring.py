"""Dense graded model of the homogeneous coordinate ring k[x]/(f).

When the coefficient of ``x0^d`` in ``f`` is nonzero, ``x0^d`` is the grlex
leading monomial and the quotient is free over ``k[x1..x_{N-1}]`` with basis
``1, x0, ..., x0^{d-1}``.  A degree-``e`` element is stored as a dense int64
vector over the normal-form monomials of degree ``e``: block ``r`` holds the
monomials ``x0^r * m(x1..)``, ordered by a stars-and-bars rank.  Reducing a
monomial only needs the precomputed normal forms of the pure powers ``x0^a``.
"""
from __future__ import annotations

import numpy as np

from .mpoly import MPoly


def _binom_vec(a: np.ndarray, n: int) -> np.ndarray:
    """C(a, n) elementwise for int arrays, 0 when a < n."""
    a = np.asarray(a, dtype=np.int64)
    out = np.ones_like(a)
    for i in range(n):
        out = out * (a - i) // (i + 1)
    return np.where(a >= n, out, 0)


def _binom(a: int, n: int) -> int:
    if n < 0 or a < n:
        return 0
    out = 1
    for i in range(n):
        out = out * (a - i) // (i + 1)
    return out


class HyperRing:
    """Graded pieces of ``F_p[x0..x_{N-1}] / (f)`` as dense vectors."""

    def __init__(self, f: MPoly):
        if f.modulus is None:
            raise ValueError("f must have F_p coefficients")
        if not f.is_homogeneous() or not f.terms:
            raise ValueError("f must be a nonzero homogeneous polynomial")
        self.f = f
        self.p = f.modulus
        self.N = f.nvars
        self.d = f.total_degree()
        lead = (self.d,) + (0,) * (self.N - 1)
        lc = f.coefficient(lead)
        if not lc:
            raise ValueError("the coefficient of x0^d must be nonzero")
        inv = pow(lc, -1, self.p)
        self.Np = self.N - 1
        # x0^d == sum_r x0^r * Q_r  with Q_r in k[x1..]_{d-r}
        self._Q = [[] for _ in range(self.d)]
        for e, c in f.terms.items():
            if e == lead:
                continue
            self._Q[e[0]].append((np.array(e[1:], dtype=np.int64), (-c * inv) % self.p))
        self._sbasis: dict[int, np.ndarray] = {}
        self._basis: dict[int, np.ndarray] = {}
        self._shift: dict = {}
        self._P: list[list[np.ndarray]] = []
        f_exps, f_coef = poly_arrays(f)
        self.f_exps, self.f_coef = f_exps, f_coef
        self._fpow: dict[int, tuple] = {}

    # combinatorics of k[x1..x_{N-1}]_j ------------------------------------------------
    def sdim(self, j: int) -> int:
        if j < 0:
            return 0
        if self.Np == 0:
            return 1 if j == 0 else 0
        return _binom(j + self.Np - 1, self.Np - 1)

    def srank(self, b: np.ndarray) -> np.ndarray:
        """Rank of each row of ``b`` (exponents of x1..) inside its degree."""
        b = np.asarray(b, dtype=np.int64)
        K = b.shape[0]
        rank = np.zeros(K, dtype=np.int64)
        if self.Np <= 1:
            return rank
        tail = np.cumsum(b[:, ::-1], axis=1)[:, ::-1]  # tail[:, c] = sum b[:, c:]
        for c in range(self.Np - 1):
            s = tail[:, c + 1]
            n = self.Np - 1 - c
            rank += _binom_vec(s - 1 + n, n)
        return rank

    def sbasis(self, j: int) -> np.ndarray:
        """Exponents of x1.. of degree j in rank order, shape (sdim, Np)."""
        if j in self._sbasis:
            return self._sbasis[j]
        if self.Np == 0:
            out = np.zeros((1 if j == 0 else 0, 0), dtype=np.int64)
        else:
            rows = list(_compositions(j, self.Np))
            arr = np.array(rows, dtype=np.int64).reshape(-1, self.Np)
            order = np.argsort(self.srank(arr), kind="stable")
            out = arr[order]
        self._sbasis[j] = out
        return out

    # graded pieces of the quotient ------------------------------------------------------
    def offsets(self, e: int) -> list[int]:
        offs = [0]
        for r in range(self.d):
            offs.append(offs[-1] + self.sdim(e - r))
        return offs

    def dim(self, e: int) -> int:
        return self.offsets(e)[-1]

    def basis(self, e: int) -> np.ndarray:
        """Normal-form monomials of degree ``e`` (rows of full exponents)."""
        if e in self._basis:
            return self._basis[e]
        blocks = []
        for r in range(min(self.d, e + 1)):
            sb = self.sbasis(e - r)
            col = np.full((sb.shape[0], 1), r, dtype=np.int64)
            blocks.append(np.concatenate([col, sb], axis=1))
        out = np.concatenate(blocks) if blocks else np.zeros((0, self.N), dtype=np.int64)
        self._basis[e] = out
        return out

    def _shift_map(self, j: int, beta: tuple) -> np.ndarray:
        key = (j, beta)
        m = self._shift.get(key)
        if m is None:
            m = self.srank(self.sbasis(j) + np.array(beta, dtype=np.int64))
            if len(self._shift) > 20000:
                self._shift.clear()
            self._shift[key] = m
        return m

    def _power_table(self, a: int) -> list[np.ndarray]:
        """Normal form of x0^a as d dense blocks over k[x1..]_{a-r}."""
        while len(self._P) <= a:
            k = len(self._P)
            if k < self.d:
                blocks = [np.zeros(self.sdim(k - r), dtype=np.int64) for r in range(self.d)]
                blocks[k][0] = 1
            else:
                prev = self._P[k - 1]
                blocks = [np.zeros(self.sdim(k - r), dtype=np.int64) for r in range(self.d)]
                for r in range(self.d - 1):
                    blocks[r + 1] += prev[r]
                top = prev[self.d - 1]
                jtop = k - 1 - (self.d - 1)
                if top.any():
                    for r in range(self.d):
                        for beta, c in self._Q[r]:
                            tgt = self._shift_map(jtop, tuple(int(b) for b in beta))
                            np.add.at(blocks[r], tgt, c * top)
                blocks = [b % self.p for b in blocks]
            self._P.append(blocks)
        return self._P[a]

    def nf_monomials(self, exps, coeffs, e: int) -> np.ndarray:
        """Dense normal form of ``sum coeffs[k] * x^exps[k]`` (all of degree e)."""
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, self.N)
        out = self.nf_columns(exps, coeffs, np.zeros(exps.shape[0], dtype=np.int64), 1, e)
        return out[:, 0]

    def nf_columns(self, exps, coeffs, cols, ncols: int, e: int) -> np.ndarray:
        """Normal forms of several sums at once; term k contributes to column cols[k]."""
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, self.N)
        coeffs = np.asarray(coeffs, dtype=np.int64).reshape(-1) % self.p
        cols = np.asarray(cols, dtype=np.int64).reshape(-1)
        offs = self.offsets(e)
        out = np.zeros((offs[-1], ncols), dtype=np.int64)
        if exps.shape[0] == 0:
            return out
        if np.any(exps < 0):
            raise ValueError("negative exponent in nf_monomials")
        if np.any(exps.sum(axis=1) != e):
            raise ValueError("monomials are not all of degree e")
        a = exps[:, 0]
        low = a < self.d
        if low.any():
            idx = np.array(offs, dtype=np.int64)[a[low]] + self.srank(exps[low, 1:])
            np.add.at(out, (idx, cols[low]), coeffs[low])
        high = ~low
        if high.any():
            ah = a[high]
            bh = exps[high, 1:]
            ch = coeffs[high]
            colh = cols[high]
            for aval in np.unique(ah):
                sel = ah == aval
                b = bh[sel]
                c = ch[sel]
                cl = colh[sel]
                table = self._power_table(int(aval))
                for r in range(self.d):
                    blk = table[r]
                    nz = np.nonzero(blk)[0]
                    if nz.size == 0:
                        continue
                    j = int(aval) - r
                    sb = self.sbasis(j)[nz]
                    bv = blk[nz]
                    # chunk to bound memory
                    step = max(1, 2_000_000 // max(1, nz.size))
                    for s0 in range(0, b.shape[0], step):
                        bb = b[s0:s0 + step]
                        cc = c[s0:s0 + step]
                        tgt = self.srank((sb[None, :, :] + bb[:, None, :]).reshape(-1, self.Np))
                        vals = (cc[:, None] * bv[None, :]).reshape(-1) % self.p
                        cidx = np.repeat(cl[s0:s0 + step], nz.size)
                        np.add.at(out, (offs[r] + tgt, cidx), vals)
                    out %= self.p
        return out % self.p

    def nf_poly(self, g: MPoly) -> np.ndarray:
        e = g.total_degree()
        exps, coef = poly_arrays(g)
        return self.nf_monomials(exps, coef, max(e, 0))

    def vec_to_arrays(self, vec: np.ndarray, e: int):
        nz = np.nonzero(vec)[0]
        return self.basis(e)[nz], vec[nz]

    def vec_to_poly(self, vec: np.ndarray, e: int) -> MPoly:
        exps, coef = self.vec_to_arrays(vec, e)
        return MPoly({tuple(int(x) for x in row): int(c) for row, c in zip(exps, coef)},
                     self.N, self.p, _clean=True)

    def mul(self, u: np.ndarray, eu: int, v: np.ndarray, ev: int) -> np.ndarray:
        eu_, cu = self.vec_to_arrays(u, eu)
        ev_, cv = self.vec_to_arrays(v, ev)
        if eu_.shape[0] == 0 or ev_.shape[0] == 0:
            return np.zeros(self.dim(eu + ev), dtype=np.int64)
        exps = (eu_[:, None, :] + ev_[None, :, :]).reshape(-1, self.N)
        coef = (cu[:, None] * cv[None, :]).reshape(-1) % self.p
        exps, coef = combine_terms(exps, coef, self.p)
        return self.nf_monomials(exps, coef, eu + ev)

    def mul_monomial(self, u: np.ndarray, eu: int, beta) -> np.ndarray:
        beta = np.asarray(beta, dtype=np.int64)
        exps, coef = self.vec_to_arrays(u, eu)
        return self.nf_monomials(exps + beta, coef, eu + int(beta.sum()))

    def f_power(self, k: int):
        """Exponent/coefficient arrays of f^k in the polynomial ring."""
        if k not in self._fpow:
            fk = self.f ** k
            self._fpow[k] = poly_arrays(fk)
        return self._fpow[k]


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def poly_arrays(g: MPoly):
    if not g.terms:
        return np.zeros((0, g.nvars), dtype=np.int64), np.zeros(0, dtype=np.int64)
    exps = np.array(list(g.terms.keys()), dtype=np.int64).reshape(-1, g.nvars)
    coef = np.array(list(g.terms.values()), dtype=np.int64)
    return exps, coef


def _pack_rows(exps: np.ndarray):
    """Order-preserving int64 key per row, or None if it would overflow."""
    lo = exps.min(axis=0)
    span = exps.max(axis=0) - lo + 1
    total = 1
    for r in span.tolist():
        total *= r
    if total >= 2 ** 62:
        return None
    key = np.zeros(exps.shape[0], dtype=np.int64)
    for j in range(exps.shape[1]):
        key = key * int(span[j]) + (exps[:, j] - lo[j])
    return key


def combine_terms(exps: np.ndarray, coef: np.ndarray, p: int):
    """Merge equal exponent rows, summing coefficients mod p; drop zeros."""
    if exps.shape[0] == 0:
        return exps, coef
    key = _pack_rows(exps)
    if key is None:
        uniq, inv = np.unique(exps, axis=0, return_inverse=True)
    else:
        _, first, inv = np.unique(key, return_index=True, return_inverse=True)
        uniq = exps[first]
    inv = inv.reshape(-1)
    acc = np.zeros(uniq.shape[0], dtype=np.int64)
    np.add.at(acc, inv, coef)
    acc %= p
    keep = acc != 0
    return uniq[keep], acc[keep]
