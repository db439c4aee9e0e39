"""1-forms, the maps D_m, truncated B_m spans and the Cartier operator.

On a smooth plane cubic X the sheaf of 1-forms is free of rank one, spanned
by the global regular form omega (``dx/f_y`` on the chart ``z = 1``).  A
1-form on a chart is therefore stored as its coefficient function ``g`` in
``g * omega``.  With this trivialization

* ``d h = delta(h) * omega`` where ``delta(h) = (grad h x grad f)_k / x_k``
  for any invertible ``x_k`` on the chart (the cross product of the two
  gradients is proportional to the Euler vector along X);
* the Cartier operator becomes ``C(g * omega) = trace(g) * omega`` with
  ``trace(G / M) = u(f^(p-1) * G * M^(p-1)) / M``, ``u`` sending
  ``x^(p*b + (p-1))`` to ``x^b`` and every other monomial to 0.

The trace formula is valid for hypersurfaces of any dimension (it is the
Cartier operator on top forms); the derivation is specific to curves.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exactalg.chart import ChartFunction, as_chart, window_monomials
from .exactalg.ring import HyperRing, combine_terms, poly_arrays
from .linalg import column_basis, rank_mod_p, solve_mod_p, nullspace_mod_p
from .wittcore import WittVector


class FormError(ValueError):
    pass


# ---------------------------------------------------------------------------
# the trace (Cartier operator on top forms)


def cartier_trace(g: ChartFunction, times: int = 1) -> ChartFunction:
    """Apply the function-level Cartier operator ``times`` times."""
    for _ in range(times):
        g = _trace_once(g)
    return g


def trace_terms(ring: HyperRing, exps: np.ndarray, coef: np.ndarray, owner: np.ndarray):
    """Trace of Laurent terms; chart independent.

    ``x^a`` maps to the sum over terms ``c x^b`` of ``f^(p-1)`` with
    ``a + b = p-1 (mod p)`` of ``c x^((a + b - (p-1)) / p)``.  Terms keep
    their owner index and are merged per owner.
    """
    p, N = ring.p, ring.N
    if ring.d != N:
        raise FormError("the trace formula needs deg f = number of variables")
    z = np.zeros(0, dtype=np.int64)
    if exps.shape[0] == 0:
        return np.zeros((0, N), dtype=np.int64), z, z
    F_exps, F_coef = ring.f_power(p - 1)
    weights = p ** np.arange(N, dtype=np.int64)
    g_code = ((p - 1 - exps) % p) @ weights
    f_code = (F_exps % p) @ weights
    order = np.argsort(f_code, kind="stable")
    f_sorted = f_code[order]
    out_e, out_c, out_o = [], [], []
    for code in np.unique(g_code):
        lo, hi = np.searchsorted(f_sorted, [code, code + 1])
        if lo == hi:
            continue
        fi = order[lo:hi]
        gi = np.nonzero(g_code == code)[0]
        s = (exps[gi][:, None, :] + F_exps[fi][None, :, :]).reshape(-1, N)
        out_e.append((s - (p - 1)) // p)
        out_c.append((coef[gi][:, None] * F_coef[fi][None, :]).reshape(-1) % p)
        out_o.append(np.repeat(owner[gi], fi.size))
    if not out_e:
        return np.zeros((0, N), dtype=np.int64), z, z
    E = np.concatenate(out_e)
    C = np.concatenate(out_c)
    O = np.concatenate(out_o)
    key, C = combine_terms(np.concatenate([O[:, None], E], axis=1), C, p)
    return key[:, 1:], C, key[:, 0]


def _trace_once(g: ChartFunction) -> ChartFunction:
    exps, coef = g.laurent_terms()
    e, c, _ = trace_terms(g.ring, exps, coef, np.zeros(exps.shape[0], dtype=np.int64))
    return ChartFunction.from_laurent(g.ring, g.chart, e, c, pole=g.pole)


def cartier_kernel(ring: HyperRing, chart, m: int, pole: int):
    """Window monomials of pole ``pole`` on U_S and a basis of ker(T^m) there.

    Returns ``(mons, K)`` with the kernel vectors as columns of ``K`` over
    the monomials.  On a curve every 1-form is closed, so this is the
    truncation of B_m Omega = ker(C^m).
    """
    S = as_chart(chart)
    mons = window_monomials(ring, S, pole)
    k = mons.shape[0]
    e, c, o = mons, np.ones(k, dtype=np.int64), np.arange(k, dtype=np.int64)
    for _ in range(m):
        e, c, o = trace_terms(ring, e, c, o)
    shift = np.zeros(ring.N, dtype=np.int64)
    shift[list(S)] = pole
    M = ring.nf_columns(e + shift, c, o, k, len(S) * pole)
    return mons, nullspace_mod_p(M, ring.p)


# ---------------------------------------------------------------------------
# derivation and 1-forms on curves


class _CurveData:
    """Cached partial derivatives of f for a plane cubic."""

    def __init__(self, ring: HyperRing):
        if ring.N != 3:
            raise FormError("1-forms are implemented for plane curves only")
        self.ring = ring
        self.grad = [poly_arrays(ring.f.derivative(i)) for i in range(3)]


_CURVES: dict = {}


def _curve(ring: HyperRing) -> _CurveData:
    c = _CURVES.get(id(ring))
    if c is None or c.ring is not ring:
        c = _CurveData(ring)
        _CURVES[id(ring)] = c
    return c


def _delta_terms(ring: HyperRing, S: tuple, exps: np.ndarray, coef: np.ndarray):
    """Uncombined Laurent terms of delta(coef[k] * x^exps[k]) with owner index k."""
    cd = _curve(ring)
    p = ring.p
    k = S[0]
    k1, k2 = (k + 1) % 3, (k + 2) % 3
    owner = np.arange(exps.shape[0], dtype=np.int64)
    pieces_e, pieces_c, pieces_o = [], [], []
    for a_idx, b_idx, sign in ((k1, k2, 1), (k2, k1, -1)):
        mult = exps[:, a_idx] % p
        sel = mult != 0
        be, bc = cd.grad[b_idx]
        if not sel.any() or be.shape[0] == 0:
            continue
        base = exps[sel].copy()
        base[:, a_idx] -= 1
        base[:, k] -= 1
        cc = coef[sel] * mult[sel] * sign
        pieces_e.append((base[:, None, :] + be[None, :, :]).reshape(-1, 3))
        pieces_c.append((cc[:, None] * bc[None, :]).reshape(-1) % p)
        pieces_o.append(np.repeat(owner[sel], be.shape[0]))
    if not pieces_e:
        z = np.zeros(0, dtype=np.int64)
        return np.zeros((0, 3), dtype=np.int64), z, z
    return np.concatenate(pieces_e), np.concatenate(pieces_c), np.concatenate(pieces_o)


def _delta_laurent(ring: HyperRing, S: tuple, exps: np.ndarray, coef: np.ndarray):
    """Laurent terms of delta(sum coef * x^exps) computed in the frame of chart S."""
    e, c, _ = _delta_terms(ring, S, exps, coef)
    if e.shape[0] == 0:
        return e, c
    return combine_terms(e, c, ring.p)


def derivation(g: ChartFunction) -> ChartFunction:
    """``dg / omega`` as a chart function."""
    exps, coef = g.laurent_terms()
    e2, c2 = _delta_laurent(g.ring, g.chart, exps, coef)
    return ChartFunction.from_laurent(g.ring, g.chart, e2, c2)


@dataclass(frozen=True)
class OneForm:
    """``coeff * omega`` on the chart of ``coeff``."""

    coeff: ChartFunction

    @property
    def chart(self):
        return self.coeff.chart

    def __add__(self, other):
        return OneForm(self.coeff + other.coeff)

    def __sub__(self, other):
        return OneForm(self.coeff - other.coeff)

    def __neg__(self):
        return OneForm(-self.coeff)

    def scale(self, g) -> "OneForm":
        return OneForm(self.coeff * g)

    def restrict(self, T) -> "OneForm":
        return OneForm(self.coeff.restrict(T))

    def is_zero(self) -> bool:
        return self.coeff.is_zero()

    def __eq__(self, other):
        return isinstance(other, OneForm) and self.coeff == other.coeff

    __hash__ = None


def d(g: ChartFunction) -> OneForm:
    return OneForm(derivation(g))


def cartier(form: OneForm, times: int = 1) -> OneForm:
    """Cartier operator on 1-forms of a curve (p^-1-linear)."""
    return OneForm(cartier_trace(form.coeff, times))


def d_m(w: WittVector) -> OneForm:
    """D_m(f_0..f_{m-1}) = sum_j f_j^(p^(m-1-j) - 1) d f_j."""
    m, p = w.length, w.p
    total = None
    for j, fj in enumerate(w.coords):
        df = derivation(fj)
        k = p ** (m - 1 - j) - 1
        term = df if k == 0 else (fj ** k) * df
        total = term if total is None else total + term
    return OneForm(total)


# ---------------------------------------------------------------------------
# generators mu^(p^t - 1) d mu and truncated B_m spans


def chart_monomials(ring: HyperRing, chart, pole_bound: int) -> np.ndarray:
    """All Laurent monomials of degree 0 on U_S with per-variable pole <= D."""
    S = as_chart(chart)
    N = ring.N
    lo = np.zeros(N, dtype=np.int64)
    lo[list(S)] = -pole_bound
    # positive part bounded by the total negative part
    cap = pole_bound * len(S)
    ranges = [range(int(lo[i]), cap + 1) for i in range(N - 1)]
    rows = []
    for head in np.array(np.meshgrid(*[np.array(r) for r in ranges], indexing="ij")).reshape(N - 1, -1).T:
        last = -int(head.sum())
        if lo[N - 1] <= last <= cap:
            rows.append(list(head) + [last])
    arr = np.array(rows, dtype=np.int64).reshape(-1, N)
    # canonical order: grlex-descending on exponents shifted to be nonnegative
    key = np.lexsort(arr.T[::-1])
    return arr[key]


def generator_laurent(ring: HyperRing, chart, alpha, t: int):
    """Laurent terms of mu^(p^t - 1) * delta(mu) for mu = x^alpha (frame of chart)."""
    S = as_chart(chart)
    alpha = np.asarray(alpha, dtype=np.int64).reshape(1, -1)
    e, c = _delta_laurent(ring, S, alpha, np.ones(1, dtype=np.int64))
    return e + (ring.p ** t - 1) * alpha, c


def generator_terms(ring: HyperRing, chart, gens):
    """Uncombined Laurent terms of all generators, with owner column indices."""
    S = as_chart(chart)
    if not gens:
        z = np.zeros(0, dtype=np.int64)
        return np.zeros((0, ring.N), dtype=np.int64), z, z
    ts = np.array([t for t, _ in gens], dtype=np.int64)
    alphas = np.array([a for _, a in gens], dtype=np.int64).reshape(-1, ring.N)
    e, c, own = _delta_terms(ring, S, alphas, np.ones(len(gens), dtype=np.int64))
    scale = ring.p ** ts[own] - 1
    return e + scale[:, None] * alphas[own], c, own


def generator_matrix(ring: HyperRing, chart, gens, pole: int) -> np.ndarray:
    """Columns = coordinates (pole bound ``pole``) of each generator (t, alpha)."""
    S = as_chart(chart)
    shift = np.zeros(ring.N, dtype=np.int64)
    shift[list(S)] = pole
    e_deg = len(S) * pole
    E, C, own = generator_terms(ring, S, gens)
    E = E + shift
    if E.shape[0] and np.any(E[:, list(S)] < 0):
        raise FormError("generator pole exceeds the ambient pole bound")
    return ring.nf_columns(E, C, own, len(gens), e_deg)


def ambient_pole(p: int, m: int, D: int) -> int:
    return p ** (m - 1) * D + 2


@dataclass
class BmSpan:
    """Truncated model of B_m Omega(U_S): span of mu^(p^t-1) d mu, t < m, pole(mu) <= D."""

    chart: tuple
    m: int
    D: int
    pole: int
    generators: list
    matrix: np.ndarray = field(repr=False)
    basis_columns: np.ndarray = field(repr=False)
    p: int = 0

    @property
    def dim(self) -> int:
        return int(self.basis_columns.size)

    def basis_matrix(self) -> np.ndarray:
        return self.matrix[:, self.basis_columns]

    def contains(self, vec: np.ndarray) -> bool:
        B = self.basis_matrix()
        return rank_mod_p(np.concatenate([B, vec.reshape(-1, 1)], axis=1), self.p) == self.dim

    def express(self, vec: np.ndarray):
        """Coefficients over ``generators`` reproducing ``vec`` (None if outside)."""
        x = solve_mod_p(self.matrix, vec, self.p)
        return x

    def relations(self) -> np.ndarray:
        return nullspace_mod_p(self.matrix, self.p)


def bm_span(ring: HyperRing, chart, m: int, D: int, pole: int | None = None) -> BmSpan:
    S = as_chart(chart)
    if m < 1 or D < 0:
        raise ValueError("need m >= 1 and D >= 0")
    p = ring.p
    if pole is None:
        pole = ambient_pole(p, m, D)
    mons = chart_monomials(ring, S, D)
    gens = []
    for t in range(m):
        for alpha in mons:
            if np.all(alpha % p == 0):
                continue  # d(mu) = 0 for p-th powers
            gens.append((t, tuple(int(a) for a in alpha)))
    M = generator_matrix(ring, S, gens, pole)
    cols = column_basis(M, p)
    return BmSpan(S, m, D, pole, gens, M, cols, p)


def cartier_on_bm(span: BmSpan, coeffs, k: int = 1):
    """Generator-wise Cartier: (t, mu) -> (t - k, mu), dropped when t < k.

    Returns ``(generators, coefficients)`` describing an element of the
    level-(m-k) span.
    """
    if not 1 <= k <= span.m - 1:
        raise ValueError("need 1 <= k <= m - 1")
    coeffs = np.asarray(coeffs, dtype=np.int64) % span.p
    out_gens, out_c = [], []
    for (t, alpha), c in zip(span.generators, coeffs):
        if c and t >= k:
            out_gens.append((t - k, alpha))
            out_c.append(int(c))
    return out_gens, np.array(out_c, dtype=np.int64)


def combination_vector(ring: HyperRing, chart, gens, coeffs, pole: int) -> np.ndarray:
    M = generator_matrix(ring, chart, gens, pole)
    return (M @ (np.asarray(coeffs, dtype=np.int64) % ring.p)) % ring.p


def generator_function(ring: HyperRing, chart, alpha, t: int) -> ChartFunction:
    e, c = generator_laurent(ring, chart, alpha, t)
    return ChartFunction.from_laurent(ring, chart, e, c)


def monomial_function(ring: HyperRing, chart, alpha) -> ChartFunction:
    return ChartFunction.from_laurent(ring, chart, np.asarray(alpha).reshape(1, -1), [1])


# ---------------------------------------------------------------------------
# Serre sequence at truncation


def serre_kernel_check(ring: HyperRing, chart, D: int) -> dict:
    """Compare ker(d) on the pole-D window with Frobenius of the pole-D/p window.

    Needs ``p | D`` so that the two windows correspond exactly.
    """
    p = ring.p
    S = as_chart(chart)
    if D % p:
        raise ValueError("use a pole bound divisible by p")
    mons = window_monomials(ring, S, D)
    pole = D + 2
    # matrix of delta on the window basis
    cols = []
    for alpha in mons:
        e, c = _delta_laurent(ring, S, alpha.reshape(1, -1), np.ones(1, dtype=np.int64))
        cols.append(ChartFunction.from_laurent(ring, S, e, c, pole).vec if e.shape[0]
                    else np.zeros(ring.dim(len(S) * pole), dtype=np.int64))
    Dmat = np.stack(cols, axis=1) if cols else np.zeros((0, 0), dtype=np.int64)
    ker = nullspace_mod_p(Dmat, p)
    small = window_monomials(ring, S, D // p)
    frob_cols = [ChartFunction.from_laurent(ring, S, (a * p).reshape(1, -1), [1], D).vec
                 for a in small]
    Fmat = np.stack(frob_cols, axis=1)
    dim_ker = ker.shape[1]
    dim_img = rank_mod_p(Fmat, p)
    # image of F lies in the kernel: joint rank equals kernel dimension
    joint = rank_mod_p(np.concatenate([ker, Fmat], axis=1), p)
    return {"chart": S, "D": D, "dim_kernel": dim_ker, "dim_frobenius_image": dim_img,
            "image_in_kernel": joint == dim_ker, "exact": joint == dim_ker == dim_img}


def _is_pth_power(ring: HyperRing, g: ChartFunction, D: int) -> bool:
    """Whether g (pole <= D, p | D) is a p-th power of a pole-D/p function."""
    p = ring.p
    small = window_monomials(ring, g.chart, D // p)
    F = np.stack([ChartFunction.from_laurent(ring, g.chart, (a * p).reshape(1, -1), [1], D).vec
                  for a in small], axis=1)
    return solve_mod_p(F, g.with_pole(D).vec, p) is not None


def _decomposition_identity(p: int, m: int) -> bool:
    """[a] + V(b) = (a, b_0, ..., b_{m-2}) with polynomial coordinates over F_p."""
    from .exactalg.mpoly import MPoly
    from .wittcore import teichmuller, verschiebung, witt_add

    xs = [MPoly.var(i, m, p) for i in range(m)]
    tail = WittVector(xs[1:], p)
    return witt_add(teichmuller(xs[0], p, m), verschiebung(tail)) == WittVector(xs, p)


def serre_exactness(ring: HyperRing, chart, m: int, D: int, samples: int = 8,
                    seed: int = 0) -> dict:
    """Truncated exactness of 0 -> W_m O --F--> W_m O --D_m--> Omega on one chart.

    Coordinates range over the pole-D window.  The kernel of D_m is peeled one
    coordinate at a time: C^(m-1) D_m(w) = d f_0, so D_m(w) = 0 forces f_0 to
    be a p-th power (the exact linear statement ``linear``), and then
    w = [f_0] + V(w') with D_m([g^p]) = 0 and D_m(V w') = D_{m-1}(w').  The
    linear statement is checked exactly on the window, the decomposition
    with polynomial coordinates, and the remaining identities on random Witt
    vectors from the window, together with D_m(F w) = 0 and D_m(w) != 0 for
    vectors with a non-p-th-power coordinate.
    """
    from .wittcore import frobenius_witt, teichmuller, verschiebung

    p = ring.p
    S = as_chart(chart)
    lin = serre_kernel_check(ring, S, D)
    rng = np.random.default_rng(seed)

    def rand(pole):
        mons = window_monomials(ring, S, pole)
        return ChartFunction.from_laurent(ring, S, mons, rng.integers(0, p, mons.shape[0]), pole)

    checks = {"linear": lin["exact"], "peel_cartier": True, "peel_teichmuller": True,
              "peel_verschiebung": True, "image_in_kernel": True, "off_image_detected": True}
    if m > 1 and not _decomposition_identity(p, m):
        checks["peel_teichmuller"] = False
    for _ in range(samples):
        coords = [rand(D) for _ in range(m)]
        w = WittVector(coords, p)
        Dw = d_m(w)
        if m > 1:
            if not cartier(Dw, m - 1) == d(coords[0]):
                checks["peel_cartier"] = False
            tail = WittVector(coords[1:], p)
            if not d_m(verschiebung(tail)) == d_m(tail):
                checks["peel_verschiebung"] = False
        g = rand(D // p)
        if not d_m(teichmuller(g.frobenius(), p, m)).is_zero():
            checks["peel_teichmuller"] = False
        small = WittVector([rand(D // p) for _ in range(m)], p)
        if not d_m(frobenius_witt(small)).is_zero():
            checks["image_in_kernel"] = False
        # a vector whose first non-p-th-power coordinate is at position j
        j = int(rng.integers(0, m))
        coords = [rand(D // p).frobenius() for _ in range(m)]
        coords[j] = rand(D)
        if not _is_pth_power(ring, coords[j], D):
            if d_m(WittVector(coords, p)).is_zero():
                checks["off_image_detected"] = False
    return {"chart": S, "m": m, "D": D, "dim_kernel": lin["dim_kernel"],
            "dim_frobenius_image": lin["dim_frobenius_image"], "checks": checks,
            "exact": all(checks.values())}
