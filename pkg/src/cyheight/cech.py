"""Hypersurface models, smoothness certificates and truncated Cech cohomology.

A section space on ``U_S`` is described chart-independently by Laurent terms
(rows of exponents with coefficients and an owner column).  Evaluating the
same description on any larger chart ``T`` gives the restriction, so every
Cech differential is assembled by re-expanding generators on the target
chart.  Cohomology dimensions are exact ranks over F_p.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .exactalg.fp import check_prime
from .exactalg.mpoly import MPoly, format_poly
from .exactalg.ring import HyperRing
from .exactalg.chart import as_chart, window_monomials
from .linalg import column_basis, rank_mod_p
from . import diffcalc

log = logging.getLogger(__name__)

CURVE_SCHEDULE = (4, 8, 12, 16)
SURFACE_SCHEDULE = (3, 5, 7)


class ModelError(ValueError):
    """Rejected input; ``kind`` is a short machine-readable reason."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class NonStabilized(RuntimeError):
    def __init__(self, values, schedule):
        self.values = list(values)
        self.schedule = list(schedule)
        super().__init__(f"no two consecutive equal values: {self.values} at D={self.schedule}")


# ---------------------------------------------------------------------------
# smoothness


@dataclass(frozen=True)
class SmoothnessCertificate:
    smooth: bool
    degree: int | None = None        # e with (f, grad f)_e = full degree-e piece
    point: tuple | None = None       # a singular point when found
    field: str | None = None         # field of definition of the point
    detail: str = ""


def _monomials(nvars: int, e: int) -> np.ndarray:
    rows = [c for c in itertools.product(range(e + 1), repeat=nvars - 1) if sum(c) <= e]
    arr = np.array([list(c) + [e - sum(c)] for c in rows], dtype=np.int64)
    return arr.reshape(-1, nvars)


def _encode(exps: np.ndarray, base: int) -> np.ndarray:
    return exps @ (base ** np.arange(exps.shape[1], dtype=np.int64))


def _ideal_fills(gens: list, nvars: int, e: int, p: int) -> bool:
    targets = _monomials(nvars, e)
    codes = _encode(targets, e + 1)
    order = np.argsort(codes)
    sorted_codes = codes[order]
    blocks = []
    for g in gens:
        ge = g.total_degree()
        if ge < 0 or ge > e:
            continue
        mons = _monomials(nvars, e - ge)
        M = np.zeros((targets.shape[0], mons.shape[0]), dtype=np.int64)
        for exp, c in g.terms.items():
            rows = order[np.searchsorted(sorted_codes, _encode(mons + np.array(exp), e + 1))]
            M[rows, np.arange(mons.shape[0])] += c
        blocks.append(M % p)
    if not blocks:
        return False
    return rank_mod_p(np.concatenate(blocks, axis=1), p) == targets.shape[0]


def _gf2_modulus(p: int):
    """(c0, c1) with x^2 - c1 x - c0 irreducible over F_p."""
    for c1 in range(p):
        for c0 in range(1, p):
            if all((x * x - c1 * x - c0) % p for x in range(p)):
                return c0, c1
    raise RuntimeError("no irreducible quadratic found")


class _Field:
    """F_p or F_{p^2} elements as int arrays of shape (..., k)."""

    def __init__(self, p: int, degree: int):
        self.p, self.k = p, degree
        if degree == 2:
            self.c0, self.c1 = _gf2_modulus(p)

    def elements(self) -> np.ndarray:
        if self.k == 1:
            return np.arange(self.p).reshape(-1, 1)
        a, b = np.meshgrid(np.arange(self.p), np.arange(self.p), indexing="ij")
        return np.stack([a.ravel(), b.ravel()], axis=1)

    def mul(self, x, y):
        p = self.p
        if self.k == 1:
            return (x * y) % p
        a, b = x[..., 0], x[..., 1]
        c, d = y[..., 0], y[..., 1]
        bd = b * d
        re = (a * c + bd * self.c0) % p
        im = (a * d + b * c + bd * self.c1) % p
        return np.stack([re, im], axis=-1)

    def one(self, shape):
        out = np.zeros(tuple(shape) + (self.k,), dtype=np.int64)
        out[..., 0] = 1
        return out

    def evaluate(self, g: MPoly, pts: np.ndarray) -> np.ndarray:
        """pts has shape (B, nvars, k)."""
        B = pts.shape[0]
        acc = np.zeros((B, self.k), dtype=np.int64)
        for exp, c in g.terms.items():
            term = self.one((B,))
            for i, a in enumerate(exp):
                for _ in range(a):
                    term = self.mul(term, pts[:, i, :])
            acc = (acc + c * term) % self.p
        return acc


def _search_singular(polys: list, nvars: int, p: int, degree: int, limit: int):
    fld = _Field(p, degree)
    elems = fld.elements()
    q = elems.shape[0]
    for lead in range(nvars):
        rest = nvars - lead - 1
        count = q ** rest
        if count > limit:
            return None, False
        for start in range(0, count, 200_000):
            idx = np.arange(start, min(count, start + 200_000))
            pts = np.zeros((idx.size, nvars, fld.k), dtype=np.int64)
            pts[:, lead, 0] = 1
            rem = idx.copy()
            for j in range(rest):
                pts[:, lead + 1 + j, :] = elems[rem % q]
                rem //= q
            ok = np.ones(idx.size, dtype=bool)
            for g in polys:
                ok &= ~fld.evaluate(g, pts).any(axis=1)
                if not ok.any():
                    break
            hit = np.nonzero(ok)[0]
            if hit.size:
                pt = pts[hit[0]]
                return tuple(tuple(int(v) for v in row) if fld.k == 2 else int(row[0]) for row in pt), True
    return None, True


def is_smooth(f: MPoly, search_limit: int = 6_000_000) -> SmoothnessCertificate:
    """Certify that f and its partials have no common projective zero.

    The certificate is a degree e such that the degree-e piece of the ideal
    (f, df/dx_0, ..., df/dx_{N-1}) is everything; e runs up to N*(d-1)+1.  If
    that fails, F_p- and F_{p^2}-points are searched for a singular point.
    """
    p, N, d = f.modulus, f.nvars, f.total_degree()
    gens = [f] + [f.derivative(i) for i in range(N)]
    gens = [g for g in gens if g.terms]
    bound = N * (d - 1) + 1
    for e in range(max(d - 1, 1), bound + 1):
        if _ideal_fills(gens, N, e, p):
            return SmoothnessCertificate(True, degree=e, detail=f"ideal contains all monomials of degree {e}")
    for degree, name in ((1, f"F_{p}"), (2, f"F_{p}^2")):
        pt, complete = _search_singular(gens, N, p, degree, search_limit)
        if pt is not None:
            return SmoothnessCertificate(False, point=pt, field=name, detail=f"singular point over {name}")
        if not complete:
            break
    return SmoothnessCertificate(False, detail="no certificate up to degree %d and no singular point found" % bound)


# ---------------------------------------------------------------------------
# the model


def _not_divisible(f: MPoly) -> int | None:
    for i in range(f.nvars):
        if all(e[i] > 0 for e in f.terms):
            return i
    return None


def _normalize(f: MPoly):
    """Coordinates in which the x0^d coefficient is nonzero.

    Returns (g, perm, shift): first try a variable permutation, else the
    substitution x_j -> x_j + c_j x_0.
    """
    N, d = f.nvars, f.total_degree()
    for i in range(N):
        e = [0] * N
        e[i] = d
        if f.coefficient(tuple(e)):
            perm = [i] + [j for j in range(N) if j != i]
            return _permute(f, perm), tuple(perm), None
    p = f.modulus
    for c in itertools.product(range(p), repeat=N - 1):
        if _eval_int(f, [1] + list(c)):
            xs = [MPoly.var(0, N, p)] + [MPoly.var(j, N, p) + MPoly.var(0, N, p) * c[j - 1]
                                        for j in range(1, N)]
            g = f.substitute(xs, MPoly.constant(1, N, p))
            return g, tuple(range(N)), tuple(c)
    return None, None, None


def _eval_int(f: MPoly, pt) -> int:
    p = f.modulus
    total = 0
    for e, c in f.terms.items():
        t = c
        for v, a in zip(pt, e):
            t = t * pow(v, a, p) % p
        total += t
    return total % p


def _permute(f: MPoly, perm) -> MPoly:
    # new variable k is old variable perm[k]
    terms = {tuple(e[perm[k]] for k in range(f.nvars)): c for e, c in f.terms.items()}
    return MPoly(terms, f.nvars, f.modulus)


class HypersurfaceModel:
    """Smooth degree-N hypersurface in P^{N-1} over F_p with its standard cover."""

    def __init__(self, f: MPoly, check_smooth: bool = True):
        if f.modulus is None:
            raise ModelError("field", "polynomial must have F_p coefficients")
        try:
            check_prime(f.modulus)
        except ValueError as exc:
            raise ModelError("prime", str(exc)) from None
        if not f.terms:
            raise ModelError("zero", "the zero polynomial does not define a hypersurface")
        N = f.nvars
        if N < 3:
            raise ModelError("dimension", "need at least 3 variables")
        if not f.is_homogeneous():
            raise ModelError("not-homogeneous", "polynomial is not homogeneous")
        if f.total_degree() != N:
            raise ModelError("degree", f"degree {f.total_degree()} differs from the number of variables {N}")
        bad = _not_divisible(f)
        if bad is not None:
            raise ModelError("divisible", f"f is divisible by x{bad}")
        self.p = f.modulus
        self.N = N
        self.n = N - 2
        self.f_input = f
        g, perm, shift = _normalize(f)
        if g is None:
            raise ModelError("singular", "f vanishes at every F_p-point of x0 != 0 and has no pure power term")
        bad = _not_divisible(g)
        if bad is not None:
            raise ModelError("singular", "f is reducible (contains a linear factor)")
        self.f = g
        self.perm = perm
        self.shift = shift
        self.certificate = None
        if check_smooth:
            cert = is_smooth(f)
            if not cert.smooth:
                kind = "singular" if cert.point is not None else "inconclusive"
                raise ModelError(kind, cert.detail + (f" at {cert.point}" if cert.point else ""))
            self.certificate = cert
        self.ring = HyperRing(g)
        self._cache: dict = {}

    @classmethod
    def from_string(cls, text: str, p: int, nvars: int, check_smooth: bool = True):
        from .exactalg.fp import check_prime
        from .exactalg.mpoly import parse_poly
        try:
            check_prime(p)
        except ValueError as exc:
            raise ModelError("prime", str(exc)) from None
        return cls(parse_poly(text, nvars, p), check_smooth)

    def charts(self, q: int) -> list:
        return [tuple(c) for c in itertools.combinations(range(self.N), q + 1)]

    @property
    def is_curve(self) -> bool:
        return self.n == 1

    def describe(self) -> str:
        return format_poly(self.f_input)

    def default_schedule(self) -> tuple:
        return CURVE_SCHEDULE if self.is_curve else SURFACE_SCHEDULE


# ---------------------------------------------------------------------------
# section spaces and complexes


@dataclass
class Space:
    """Chart-independent description of a spanning set on U_S."""

    chart: tuple
    exps: np.ndarray
    coef: np.ndarray
    owner: np.ndarray
    ncols: int

    def select(self, cols: np.ndarray) -> "Space":
        remap = -np.ones(self.ncols, dtype=np.int64)
        remap[cols] = np.arange(cols.size)
        keep = remap[self.owner] >= 0
        return Space(self.chart, self.exps[keep], self.coef[keep], remap[self.owner[keep]], int(cols.size))

    def evaluate(self, ring: HyperRing, T, pole: int) -> np.ndarray:
        T = as_chart(T)
        shift = np.zeros(ring.N, dtype=np.int64)
        shift[list(T)] = pole
        E = self.exps + shift
        if E.shape[0] and np.any(E < 0):
            raise diffcalc.FormError("section pole exceeds the ambient pole bound")
        return ring.nf_columns(E, self.coef, self.owner, self.ncols, len(T) * pole)


def _monomial_space(ring, S, D, scale=1) -> Space:
    mons = window_monomials(ring, S, D) * scale
    k = mons.shape[0]
    return Space(S, mons, np.ones(k, dtype=np.int64), np.arange(k, dtype=np.int64), k)


def _bm_space(ring, S, m, D) -> Space:
    mons = diffcalc.chart_monomials(ring, S, D)
    gens = [(t, tuple(int(a) for a in alpha)) for t in range(m) for alpha in mons
            if np.any(alpha % ring.p)]
    e, c, own = diffcalc.generator_terms(ring, S, gens)
    return Space(S, e, c, own, len(gens))


def _kernel_space(ring, S, m, pole) -> Space:
    mons, K = diffcalc.cartier_kernel(ring, S, m, pole)
    rows, cols = np.nonzero(K)
    return Space(S, mons[rows], K[rows, cols], cols, int(K.shape[1]))


@dataclass(frozen=True)
class Sheaf:
    """A sheaf model for Cech computations.

    ``O``: the structure sheaf.  ``B`` (curves): B_m Omega as ker(C^m) on the
    window of pole ``p^(m-1) D + 1``.  ``Bgen`` (curves): the span of the
    generators mu^(p^t-1) d mu with pole(mu) <= D, a diagnostic model.
    ``B1q`` (any dimension): B_1 Omega as F_*O / O through d.
    """

    kind: str
    m: int = 0

    def __str__(self):
        if self.kind == "O":
            return "O"
        if self.kind == "B1q":
            return "B1q"
        return f"B{self.m}" + ("gen" if self.kind == "Bgen" else "")

    @classmethod
    def parse(cls, tag) -> "Sheaf":
        if isinstance(tag, Sheaf):
            return tag
        if isinstance(tag, tuple):
            return cls(*tag)
        tag = str(tag)
        if tag == "O":
            return cls("O")
        if tag == "B1q":
            return cls("B1q", 1)
        kind = "B"
        body = tag[1:]
        if body.endswith("gen"):
            kind, body = "Bgen", body[:-3]
        if tag.startswith("B") and body.isdigit() and int(body) >= 1:
            return cls(kind, int(body))
        raise ValueError(f"unknown sheaf tag {tag!r}")


@dataclass
class CechComplexDescriptor:
    sheaf: Sheaf
    D: int
    pole: int
    p: int
    charts: list                       # charts[q] = list of S
    spaces: dict = field(repr=False)   # S -> basis Space
    dims: dict = field(default_factory=dict)        # S -> dim
    differentials: list = field(repr=False, default_factory=list)
    sub: "CechComplexDescriptor | None" = field(default=None, repr=False)

    def cochain_dim(self, q: int) -> int:
        if q < 0 or q >= len(self.charts):
            return 0
        return sum(self.dims[S] for S in self.charts[q])


def _differential(model, spaces, charts, q, pole) -> np.ndarray:
    """Block matrix of delta_q from C^q to C^{q+1} in ambient coordinates."""
    ring = model.ring
    if q + 1 >= len(charts):
        return np.zeros((0, sum(spaces[S].ncols for S in charts[q])), dtype=np.int64)
    src = charts[q]
    dst = charts[q + 1]
    col_off = np.cumsum([0] + [spaces[S].ncols for S in src])
    row_dims = [ring.dim(len(T) * pole) for T in dst]
    row_off = np.cumsum([0] + row_dims)
    M = np.zeros((row_off[-1], col_off[-1]), dtype=np.int64)
    for ti, T in enumerate(dst):
        for si, S in enumerate(src):
            if not set(S) <= set(T):
                continue
            missing = [x for x in T if x not in S][0]
            sign = -1 if T.index(missing) % 2 else 1
            block = spaces[S].evaluate(ring, T, pole)
            M[row_off[ti]:row_off[ti + 1], col_off[si]:col_off[si + 1]] = (sign * block) % model.p
    return M


def _build(model: HypersurfaceModel, sheaf: Sheaf, D: int) -> CechComplexDescriptor:
    ring = model.ring
    p = model.p
    if sheaf.kind in ("B", "Bgen") and not model.is_curve:
        raise ValueError("B_m models beyond B1q are implemented for curves only")
    charts = [model.charts(q) for q in range(model.N)]
    pole = p ** (sheaf.m - 1) * D + 1 if sheaf.kind in ("B", "Bgen") else D
    spaces, dims = {}, {}
    for qc in charts:
        for S in qc:
            if sheaf.kind == "B":
                sp = _kernel_space(ring, S, sheaf.m, pole)
            else:
                if sheaf.kind == "Bgen":
                    sp = _bm_space(ring, S, sheaf.m, D)
                else:
                    sp = _monomial_space(ring, S, D)
                cols = column_basis(sp.evaluate(ring, S, pole), p)
                sp = sp.select(cols)
            spaces[S] = sp
            dims[S] = sp.ncols
    diffs = [_differential(model, spaces, charts, q, pole) for q in range(len(charts))]
    desc = CechComplexDescriptor(sheaf, D, pole, p, charts, spaces, dims, diffs)
    if sheaf.kind == "B1q":
        sub_spaces, sub_dims = {}, {}
        for S in spaces:
            sp = _monomial_space(ring, S, D // p, scale=p)
            cols = column_basis(sp.evaluate(ring, S, pole), p)
            sub_spaces[S] = sp.select(cols)
            sub_dims[S] = int(cols.size)
        sub_diffs = [_differential(model, sub_spaces, charts, q, pole) for q in range(len(charts))]
        desc.sub = CechComplexDescriptor(Sheaf("O"), D // p, pole, p, charts, sub_spaces,
                                         sub_dims, sub_diffs)
    for S in sorted(dims):
        log.debug("%s D=%d chart=%s dim=%d", sheaf, D, S, dims[S])
    return desc


def cech_complex(model: HypersurfaceModel, sheaf, D: int) -> CechComplexDescriptor:
    sheaf = Sheaf.parse(sheaf)
    if D < 0:
        raise ValueError("D must be nonnegative")
    key = ("complex", sheaf, D)
    hit = model._cache.get(key)
    if hit is None:
        hit = _build(model, sheaf, D)
        model._cache[key] = hit
    return hit


def _ambient_block(cx: CechComplexDescriptor, model, q: int) -> np.ndarray:
    """Basis vectors of the cochain space C^q in ambient coordinates (block diagonal)."""
    ring = model.ring
    blocks = [cx.spaces[S].evaluate(ring, S, cx.pole) for S in cx.charts[q]]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    M = np.zeros((rows, cols), dtype=np.int64)
    r = c = 0
    for b in blocks:
        M[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return M


def _ranks(cx: CechComplexDescriptor) -> list:
    key = "_ranks"
    if not hasattr(cx, key):
        setattr(cx, key, [rank_mod_p(M, cx.p) if M.size else 0 for M in cx.differentials])
    return getattr(cx, key)


def cohomology_dim(cx: CechComplexDescriptor, q: int, model: HypersurfaceModel | None = None) -> int:
    """dim ker(delta_q) - rank(delta_{q-1}); quotient complexes need the model."""
    if q < 0 or q >= len(cx.charts):
        return 0
    if cx.sub is None:
        r = _ranks(cx)
        prev = r[q - 1] if q >= 1 else 0
        return cx.cochain_dim(q) - r[q] - prev
    if model is None:
        raise ValueError("quotient complexes need the model to form joint ranks")
    return _quotient_dim(cx, q, model)


def _joint_rank(cx, model, q):
    """rank[ delta_q(B^q) | A^{q+1} ] in the ambient coordinates of C^{q+1}."""
    p = cx.p
    if q + 1 >= len(cx.charts):
        return 0
    img = cx.differentials[q]
    A = _ambient_block(cx.sub, model, q + 1)
    if q < 0:
        return rank_mod_p(A, p)
    return rank_mod_p(np.concatenate([img, A], axis=1), p)


def _quotient_dim(cx, q, model):
    sub = cx.sub
    dimB = cx.cochain_dim(q)
    dimA_next = sub.cochain_dim(q + 1)
    upper = _joint_rank(cx, model, q)
    lower = _joint_rank(cx, model, q - 1) if q >= 1 else sub.cochain_dim(0)
    # h = dim B^q - (rank[dB^q|A^{q+1}] - dim A^{q+1}) - rank[dB^{q-1}|A^q]
    return dimB - (upper - dimA_next) - lower


def cohomology_dims(model: HypersurfaceModel, sheaf, D: int) -> tuple:
    cx = cech_complex(model, sheaf, D)
    return tuple(cohomology_dim(cx, q, model) for q in range(model.n + 1))


def check_dd_zero(model: HypersurfaceModel, cx: CechComplexDescriptor) -> bool:
    """delta_{q+1} o delta_q = 0, computed on the ambient images."""
    ring = model.ring
    for q in range(len(cx.charts) - 2):
        img = cx.differentials[q]
        dst, nxt = cx.charts[q + 1], cx.charts[q + 2]
        offs = np.cumsum([0] + [ring.dim(len(T) * cx.pole) for T in dst])
        for U in nxt:
            acc = np.zeros((ring.dim(len(U) * cx.pole), img.shape[1]), dtype=np.int64)
            for ti, T in enumerate(dst):
                if not set(T) <= set(U):
                    continue
                missing = [x for x in U if x not in T][0]
                sign = -1 if U.index(missing) % 2 else 1
                block = img[offs[ti]:offs[ti + 1]]
                acc += sign * _restrict_columns(ring, T, U, cx.pole, block)
            if (acc % cx.p).any():
                return False
    return True


def _restrict_columns(ring, T, U, pole, block):
    beta = np.zeros(ring.N, dtype=np.int64)
    beta[[i for i in U if i not in T]] = pole
    basis = ring.basis(len(T) * pole)
    rows, cols = np.nonzero(block)
    return ring.nf_columns(basis[rows] + beta, block[rows, cols], cols, block.shape[1], len(U) * pole)


# ---------------------------------------------------------------------------
# stabilization and profiles


def stabilize(model: HypersurfaceModel, sheaf, q=None, schedule=None):
    """First value attained at two consecutive schedule points.

    ``q`` selects one cohomological degree; ``None`` stabilizes the tuple of
    all degrees.  Returns ``(value, D)``; raises NonStabilized otherwise.
    """
    schedule = tuple(schedule or model.default_schedule())
    if list(schedule) != sorted(set(schedule)):
        raise ValueError("schedule must be strictly increasing")
    values = []
    for D in schedule:
        dims = cohomology_dims(model, sheaf, D)
        v = dims if q is None else dims[q]
        if values and values[-1] == v:
            return v, D
        values.append(v)
    raise NonStabilized(values, schedule)


@dataclass
class CohomologyProfile:
    """d_m = dim H^n(B_m), lower[m-1] = dim H^{n-1}(B_m), with the stabilizing D."""

    top: list
    lower: list
    D_final: list
    method: str

    @property
    def mmax(self) -> int:
        return len(self.top)


def cohomology_profile(model: HypersurfaceModel, mmax: int, schedule=None) -> CohomologyProfile:
    top, lower, Ds = [], [], []
    n = model.n
    if model.is_curve:
        for m in range(1, mmax + 1):
            dims, D = stabilize(model, Sheaf("B", m), None, schedule)
            top.append(dims[n])
            lower.append(dims[n - 1])
            Ds.append(D)
        method = "cartier-kernel"
    else:
        dims, D = stabilize(model, Sheaf("B1q", 1), None, schedule)
        top.append(dims[n])
        lower.append(dims[n - 1])
        Ds.append(D)
        method = "quotient"
    return CohomologyProfile(top, lower, Ds, method)


def dump_complex(model: HypersurfaceModel, cx: CechComplexDescriptor) -> str:
    """Stable text dump of basis sizes, ranks and cohomology."""
    lines = [f"complex sheaf={cx.sheaf} D={cx.D} pole={cx.pole} p={cx.p}"]
    for q, qc in enumerate(cx.charts):
        for S in qc:
            lines.append(f"space q={q} chart={','.join(map(str, S))} dim={cx.dims[S]}")
    if cx.sub is not None:
        for q, qc in enumerate(cx.charts):
            for S in qc:
                lines.append(f"subspace q={q} chart={','.join(map(str, S))} dim={cx.sub.dims[S]}")
    else:
        for q, r in enumerate(_ranks(cx)):
            lines.append(f"rank q={q} value={r}")
    for q in range(model.n + 1):
        lines.append(f"cohomology q={q} dim={cohomology_dim(cx, q, model)}")
    return "\n".join(lines) + "\n"
