"""p-typical Witt vectors of finite length.

Ring operations come from the integral structural polynomials S_n, P_n,
obtained by solving the ghost equations over Z and cached per (p, m).
Coordinates may live in any commutative ring whose elements support
``+``, ``*``, ``**`` and multiplication by Python ints (FpScalar, MPoly,
ChartFunction, or plain ints for the characteristic-0 ghost oracle).
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit
from .exactalg.fp import FpScalar, check_prime
from .exactalg.mpoly import MPoly
from .exactalg.ring import poly_arrays


class WittError(ValueError):
    pass


def ghost_poly(n: int, p: int, xs: list) -> MPoly | int:
    """w_n(x) = sum_{i<=n} p^i x_i^(p^(n-i)) for MPoly or int coordinates."""
    total = None
    for i in range(n + 1):
        t = xs[i] ** (p ** (n - i)) * (p ** i)
        total = t if total is None else total + t
    return total


@dataclass(frozen=True)
class StructuralPolys:
    p: int
    m: int
    sum_polys: tuple
    prod_polys: tuple
    sum_mod: tuple = field(repr=False)
    prod_mod: tuple = field(repr=False)
    compiled: dict = field(repr=False, compare=False)


def _solve_ghost(p, m, combine):
    nv = 2 * m
    X = [MPoly.var(i, nv) for i in range(m)]
    Y = [MPoly.var(m + i, nv) for i in range(m)]
    out = []
    for n in range(m):
        target = combine(ghost_poly(n, p, X), ghost_poly(n, p, Y))
        for i in range(n):
            target = target - out[i] ** (p ** (n - i)) * (p ** i)
        q = p ** n
        terms = {}
        for e, c in target.terms.items():
            if c % q:
                raise WittError(f"ghost equation for n={n} not divisible by p^{n}; bug")
            terms[e] = c // q
        out.append(MPoly(terms, nv, None, _clean=True))
    return out


_CACHE: dict = {}
_LOCK = threading.Lock()


def witt_structural_polys(p: int, m: int) -> StructuralPolys:
    """Sum and product polynomials of W_m for prime p (cached)."""
    check_prime(p)
    if m < 1:
        raise WittError("length must be at least 1")
    key = (p, m)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    with _LOCK:
        hit = _CACHE.get(key)
        if hit is not None:
            return hit
        S = _solve_ghost(p, m, lambda a, b: a + b)
        P = _solve_ghost(p, m, lambda a, b: a * b)
        sum_mod = tuple(s.reduce_mod(p) for s in S)
        prod_mod = tuple(q.reduce_mod(p) for q in P)
        compiled = {"sum": _compile(sum_mod, m), "prod": _compile(prod_mod, m)}
        sp = StructuralPolys(p, m, tuple(S), tuple(P), sum_mod, prod_mod, compiled)
        _CACHE[key] = sp
        return sp


def _compile(polys, m):
    exps, coefs, owner = [], [], []
    for n, q in enumerate(polys):
        e, c = poly_arrays(q)
        exps.append(e.reshape(-1, 2 * m))
        coefs.append(c)
        owner.append(np.full(c.shape[0], n, dtype=np.int64))
    return (np.ascontiguousarray(np.concatenate(exps)), np.concatenate(coefs),
            np.concatenate(owner))


def verify_ghost_identities(sp: StructuralPolys) -> bool:
    """Exact check over Z that w_n(S) = w_n(X)+w_n(Y) and w_n(P) = w_n(X)w_n(Y)."""
    p, m = sp.p, sp.m
    nv = 2 * m
    X = [MPoly.var(i, nv) for i in range(m)]
    Y = [MPoly.var(m + i, nv) for i in range(m)]
    for n in range(m):
        gx, gy = ghost_poly(n, p, X), ghost_poly(n, p, Y)
        if ghost_poly(n, p, list(sp.sum_polys)) != gx + gy:
            return False
        if ghost_poly(n, p, list(sp.prod_polys)) != gx * gy:
            return False
    return True


# ---------------------------------------------------------------------------
# Witt vectors


class WittVector:
    """Length-m Witt vector.  ``char`` is p for F_p-algebra coordinates, 0 for Z."""

    __slots__ = ("coords", "p", "char")

    def __init__(self, coords, p: int, char: int | None = None):
        self.coords = tuple(coords)
        if not self.coords:
            raise WittError("Witt vectors have length at least 1")
        self.p = p
        self.char = p if char is None else char

    @property
    def length(self) -> int:
        return len(self.coords)

    def __len__(self):
        return len(self.coords)

    def _like(self, coords):
        return WittVector(coords, self.p, self.char)

    def _check(self, other):
        if not isinstance(other, WittVector):
            raise TypeError("expected a WittVector")
        if other.length != self.length:
            raise WittError(f"length mismatch: {self.length} vs {other.length}")
        if other.p != self.p or other.char != self.char:
            raise WittError("Witt vectors over different rings")

    def _polys(self, kind):
        sp = witt_structural_polys(self.p, self.length)
        if self.char == 0:
            return sp.sum_polys if kind == "sum" else sp.prod_polys
        return sp.sum_mod if kind == "sum" else sp.prod_mod

    def _apply(self, other, kind):
        self._check(other)
        vals = list(self.coords) + list(other.coords)
        one = _one_like(self.coords[0])
        out = []
        for n, q in enumerate(self._polys(kind)):
            sub = q.substitute(vals, one)
            out.append(sub)
        return self._like(out)

    def __add__(self, other):
        return witt_add(self, other)

    def __mul__(self, other):
        return witt_mul(self, other)

    def __neg__(self):
        return witt_neg(self)

    def __sub__(self, other):
        return witt_add(self, witt_neg(other))

    def __eq__(self, other):
        if not isinstance(other, WittVector):
            return NotImplemented
        return (self.length == other.length and self.p == other.p
                and all(a == b for a, b in zip(self.coords, other.coords)))

    def __hash__(self):
        return hash((self.p, self.char, self.coords))

    def __repr__(self):
        return f"WittVector({list(self.coords)!r}, p={self.p})"


def _one_like(x):
    if isinstance(x, FpScalar):
        return FpScalar(1, x.p)
    if isinstance(x, int):
        return 1
    if isinstance(x, MPoly):
        return MPoly.constant(1, x.nvars, x.modulus)
    if hasattr(x, "ring") and hasattr(x, "chart"):
        from .exactalg.chart import ChartFunction
        return ChartFunction.constant(x.ring, x.chart, 1)
    return x ** 0


def _zero_like(x):
    return _one_like(x) * 0


def witt_add(w: WittVector, v: WittVector) -> WittVector:
    return w._apply(v, "sum")


def witt_mul(w: WittVector, v: WittVector) -> WittVector:
    return w._apply(v, "prod")


def witt_neg(w: WittVector) -> WittVector:
    """Additive inverse.

    For odd p this is coordinatewise negation ([-1] acts by (-1)^(p^j) = -1);
    otherwise multiply by the Witt vector -1.
    """
    if w.char != 0 and w.p != 2:
        return w._like([-c for c in w.coords])
    minus_one = witt_minus_one(w.p, w.length, w.char, _one_like(w.coords[0]))
    return witt_mul(minus_one, w)


def witt_minus_one(p, m, char, one=1):
    """The Witt vector -1 of length m."""
    if char == 0:
        return ghost_inverse([-1] * m, p)
    if p != 2:
        return WittVector([-one] + [one * 0] * (m - 1), p, char)
    # in W(F_2), -1 = (1, 1, 1, ...)
    return WittVector([one] * m, p, char)


def zero_vector(p, m, like, char=None):
    z = _zero_like(like)
    return WittVector([z] * m, p, char)


def one_vector(p, m, like, char=None):
    o = _one_like(like)
    return WittVector([o] + [o * 0] * (m - 1), p, char)


def frobenius_witt(w: WittVector) -> WittVector:
    """Coordinatewise p-th power; only meaningful in characteristic p."""
    if w.char == 0:
        raise WittError("frobenius_witt is only defined for characteristic-p coordinates")
    out = []
    for c in w.coords:
        out.append(c.frobenius() if hasattr(c, "frobenius") else c ** w.p)
    return w._like(out)


def verschiebung(w: WittVector) -> WittVector:
    return w._like([_zero_like(w.coords[0])] + list(w.coords))


def restriction(w: WittVector, times: int = 1) -> WittVector:
    if times >= w.length:
        raise WittError("restriction would produce an empty vector")
    return w._like(w.coords[: w.length - times])


def teichmuller(a, p: int, m: int, char: int | None = None) -> WittVector:
    z = _zero_like(a)
    return WittVector([a] + [z] * (m - 1), p, char)


def vt_decompose(w: WittVector) -> list:
    """Elements f_j with w = sum_j V^j([f_j]); these are the coordinates."""
    return list(w.coords)


def vt_reconstruct(parts: list, p: int, char: int | None = None) -> WittVector:
    m = len(parts)
    z = _zero_like(parts[0])
    total = None
    for j, f in enumerate(parts):
        term = WittVector([z] * j + [f] + [z] * (m - j - 1), p, char)
        total = term if total is None else witt_add(total, term)
    return total


def scalar_multiple(k: int, w: WittVector) -> WittVector:
    """k * w by repeated Witt addition (k >= 0)."""
    z = zero_vector(w.p, w.length, w.coords[0], w.char)
    acc, base = z, w
    while k:
        if k & 1:
            acc = witt_add(acc, base)
        k >>= 1
        if k:
            base = witt_add(base, base)
    return acc


def ghost(w: WittVector) -> list:
    """Ghost components of an integer Witt vector."""
    if w.char != 0:
        raise WittError("ghost components are only defined over the integers here")
    return [ghost_poly(n, w.p, list(w.coords)) for n in range(w.length)]


def ghost_inverse(ghosts: list, p: int) -> WittVector:
    """Integer Witt vector with the given ghost components (must be exact)."""
    xs = []
    for n, g in enumerate(ghosts):
        rest = sum(p ** i * xs[i] ** (p ** (n - i)) for i in range(n))
        num = g - rest
        if num % (p ** n):
            raise WittError("ghost vector is not in the image of integer Witt vectors")
        xs.append(num // p ** n)
    return WittVector(xs, p, 0)


# ---------------------------------------------------------------------------
# batch kernel for F_p coordinates


@njit
def _eval_batch(vals, exps, coefs, owner, nout, p):
    B = vals.shape[0]
    T = exps.shape[0]
    nv = exps.shape[1]
    out = np.zeros((B, nout), dtype=np.int64)
    for b in range(B):
        for t in range(T):
            acc = coefs[t]
            for k in range(nv):
                e = exps[t, k]
                if e == 0:
                    continue
                x = vals[b, k]
                if x == 0:
                    acc = 0
                    break
                # x^(p-1) = 1 for x in F_p^*
                e = (e - 1) % (p - 1) + 1
                r = 1
                for _ in range(e):
                    r = (r * x) % p
                acc = (acc * r) % p
            out[b, owner[t]] = (out[b, owner[t]] + acc) % p
    return out


def witt_batch(kind: str, W: np.ndarray, V: np.ndarray, p: int) -> np.ndarray:
    """Add or multiply many pairs of Witt vectors over F_p at once.

    ``W`` and ``V`` have shape ``(B, m)`` with entries in ``[0, p)``.
    """
    W = np.asarray(W, dtype=np.int64) % p
    V = np.asarray(V, dtype=np.int64) % p
    m = W.shape[1]
    sp = witt_structural_polys(p, m)
    exps, coefs, owner = sp.compiled[kind]
    vals = np.ascontiguousarray(np.concatenate([W, V], axis=1))
    return _eval_batch(vals, exps, coefs, owner, m, p)
