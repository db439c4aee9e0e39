"""Artin-Mazur height, quasi-F-split height and their comparison.

The Artin-Mazur height is read off the B_m cohomology profile:
dim H^n(X, B_m Omega) = min(m, ht - 1), so the first m with d_m < m gives
ht = d_m + 1.

The quasi-F-split height is computed from a linear feasibility problem.  On
a plane cubic, for chart data s_i, h_i on U_i and r_ij, a_ij on U_ij with

    (E1)  delta(r_ij) = s_i - s_j
    (E2)  h_i - h_j   = a_ij^(p^m) - r_ij^(p^(m-1))
    (E3)  T(s_i)      = 1

the chartwise maps

    phi_i(w) = T(s_i w_0) - T^m(h_i * D_m(w) / omega)

are W_mO-linear (F(v) w maps to v_0 phi(w)), satisfy phi o F = R^(m-1),
and agree on overlaps, so they glue to a splitting of level m.  In higher
dimension only m = 1 is handled: phi_i(w) = T(s_i w) with s_i glued and
T(s_i) = 1.  Every solution is re-verified with independent arithmetic.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .cech import (HypersurfaceModel, NonStabilized, CohomologyProfile, Space,
                   cohomology_profile, _monomial_space)
from .diffcalc import _delta_terms, trace_terms, cartier_trace, derivation, d_m
from .exactalg.chart import ChartFunction, window_monomials, as_chart
from .exactalg.fp import FpScalar
from .linalg import solve_mod_p
from .wittcore import WittVector, frobenius_witt, witt_add, witt_mul


class HeightError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# classical oracle


def _balanced(c: int, p: int) -> int:
    c %= p
    return c - p if c > p // 2 else c


def hasse_coefficient_integer(f) -> int:
    """Coefficient of (x_0...x_{N-1})^(p-1) in f^(p-1), f lifted with balanced residues.

    Enumerates the exponent vectors k (one entry per term of f) with
    sum k = p-1 and sum k_t e_t = (p-1, ..., p-1).
    """
    p, N = f.modulus, f.nvars
    terms = sorted(f.terms.items())
    exps = [np.array(e, dtype=np.int64) for e, _ in terms]
    coefs = [_balanced(c, p) for _, c in terms]
    target = np.full(N, p - 1, dtype=np.int64)
    total = 0

    def rec(t, left, acc, ks):
        nonlocal total
        if np.any(acc > target):
            return
        if t == len(terms):
            if left == 0 and np.array_equal(acc, target):
                mult = factorial(p - 1)
                val = 1
                for k, c in zip(ks, coefs):
                    mult //= factorial(k)
                    val *= c ** k
                total += mult * val
            return
        for k in range(left, -1, -1):
            rec(t + 1, left - k, acc + k * exps[t], ks + [k])

    rec(0, p - 1, np.zeros(N, dtype=np.int64), [])
    return total


def hasse_coefficient(model_or_f) -> FpScalar:
    f = model_or_f.f_input if isinstance(model_or_f, HypersurfaceModel) else model_or_f
    return FpScalar(hasse_coefficient_integer(f), f.modulus)


# ---------------------------------------------------------------------------
# height values


@dataclass(frozen=True)
class HeightValue:
    """A finite height, a lower bound, or an inconclusive result."""

    value: int | None = None
    lower: int | None = None
    reason: str = ""

    @property
    def finite(self) -> bool:
        return self.value is not None

    @property
    def inconclusive(self) -> bool:
        return self.value is None and self.lower is None

    def __str__(self):
        if self.value is not None:
            return str(self.value)
        if self.lower is not None:
            return f">={self.lower}"
        return "inconclusive"


def height_from_profile(top: list) -> HeightValue:
    for m, dm in enumerate(top, start=1):
        if dm < m:
            return HeightValue(dm + 1)
    return HeightValue(lower=len(top) + 1)


def artin_mazur_height(model: HypersurfaceModel, mmax: int, schedule=None):
    """Returns (HeightValue, profile or None)."""
    if not 1 <= mmax <= 4:
        raise ValueError("mmax must be between 1 and 4")
    try:
        prof = cohomology_profile(model, mmax, schedule)
    except NonStabilized as exc:
        return HeightValue(reason=f"profile did not stabilize: {exc}"), None
    return height_from_profile(prof.top), prof


# ---------------------------------------------------------------------------
# the splitting system


@dataclass
class SplittingProblem:
    m: int
    D: int
    windows: dict          # unknown family -> pole bound
    blocks: dict           # block name -> number of equations
    unknowns: dict         # unknown family -> number of unknowns

    @property
    def shape(self):
        return sum(self.blocks.values()), sum(self.unknowns.values())


@dataclass
class SplittingCertificate:
    m: int
    D: int
    s: dict
    h: dict = field(default_factory=dict)
    r: dict = field(default_factory=dict)
    a: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return bool(self.checks) and all(self.checks.values())


@dataclass
class SplittingResult:
    feasible: bool
    problem: SplittingProblem
    certificate: SplittingCertificate | None = None


class _Assembler:
    """Collects blocks of a sparse-by-blocks linear system in dense form."""

    def __init__(self, p):
        self.p = p
        self.cols = {}
        self.ncols = 0
        self.rows = []        # list of (name, nrows, {unknown: matrix}, rhs)

    def unknown(self, key, size):
        self.cols[key] = (self.ncols, size)
        self.ncols += size

    def equation(self, name, nrows, parts, rhs=None):
        self.rows.append((name, nrows, parts, rhs))

    def build(self):
        nrows = sum(r[1] for r in self.rows)
        A = np.zeros((nrows, self.ncols), dtype=np.int64)
        b = np.zeros(nrows, dtype=np.int64)
        r0 = 0
        for _, n, parts, rhs in self.rows:
            for key, M in parts.items():
                c0, size = self.cols[key]
                A[r0:r0 + n, c0:c0 + size] = (A[r0:r0 + n, c0:c0 + size] + M) % self.p
            if rhs is not None:
                b[r0:r0 + n] = rhs % self.p
            r0 += n
        return A, b

    def split(self, x):
        return {k: x[c0:c0 + size] for k, (c0, size) in self.cols.items()}


def _window_space(ring, S, D, power=1):
    return _monomial_space(ring, S, D, scale=power)


def _delta_space(ring, S, D):
    mons = window_monomials(ring, S, D)
    e, c, o = _delta_terms(ring, as_chart(S), mons, np.ones(mons.shape[0], dtype=np.int64))
    return Space(as_chart(S), e, c, o, mons.shape[0])


def _trace_space(ring, S, D):
    mons = window_monomials(ring, S, D)
    k = mons.shape[0]
    e, c, o = trace_terms(ring, mons, np.ones(k, dtype=np.int64), np.arange(k, dtype=np.int64))
    return Space(as_chart(S), e, c, o, k)


def _one(ring, S, pole):
    return ChartFunction.constant(ring, S, 1).coords(pole)


def _as_function(ring, S, D, coeffs):
    mons = window_monomials(ring, S, D)
    return ChartFunction.from_laurent(ring, S, mons, coeffs, D)


def curve_windows(p: int, m: int, D: int) -> dict:
    P2 = p ** (m - 1) * D
    Da = -(-D // p)
    P2 = max(P2, p ** m * Da)
    return {"r": D, "s": D + 1, "a": Da, "h": P2, "E1": D + 1, "E2": P2}


def _curve_system(model: HypersurfaceModel, m: int, D: int):
    ring, p = model.ring, model.p
    W = curve_windows(p, m, D)
    singles = model.charts(0)
    pairs = model.charts(1)
    asm = _Assembler(p)
    for S in singles:
        asm.unknown(("s", S), ring.dim(W["s"]))
        asm.unknown(("h", S), ring.dim(W["h"]))
    for S in pairs:
        asm.unknown(("r", S), ring.dim(2 * W["r"]))
        asm.unknown(("a", S), ring.dim(2 * W["a"]))
    blocks = {"E1": 0, "E2": 0, "E3": 0}
    for S in pairs:
        i, j = (S[0],), (S[1],)
        P = W["E1"]
        n = ring.dim(2 * P)
        parts = {("r", S): _delta_space(ring, S, W["r"]).evaluate(ring, S, P),
                 ("s", i): -_window_space(ring, i, W["s"]).evaluate(ring, S, P),
                 ("s", j): _window_space(ring, j, W["s"]).evaluate(ring, S, P)}
        asm.equation(("E1", S), n, parts)
        blocks["E1"] += n
        P = W["E2"]
        n = ring.dim(2 * P)
        parts = {("h", i): _window_space(ring, i, W["h"]).evaluate(ring, S, P),
                 ("h", j): -_window_space(ring, j, W["h"]).evaluate(ring, S, P),
                 ("a", S): -_window_space(ring, S, W["a"], p ** m).evaluate(ring, S, P),
                 ("r", S): _window_space(ring, S, W["r"], p ** (m - 1)).evaluate(ring, S, P)}
        asm.equation(("E2", S), n, parts)
        blocks["E2"] += n
    for S in singles:
        P = W["s"]
        n = ring.dim(P)
        asm.equation(("E3", S), n, {("s", S): _trace_space(ring, S, W["s"]).evaluate(ring, S, P)},
                     _one(ring, S, P))
        blocks["E3"] += n
    unknowns = {}
    for (fam, _), (_, size) in asm.cols.items():
        unknowns[fam] = unknowns.get(fam, 0) + size
    return asm, SplittingProblem(m, D, W, blocks, unknowns)


def _glue_system(model: HypersurfaceModel, D: int):
    ring, p = model.ring, model.p
    singles = model.charts(0)
    asm = _Assembler(p)
    for S in singles:
        asm.unknown(("s", S), ring.dim(D))
    blocks = {"glue": 0, "trace": 0}
    for S in model.charts(1):
        i, j = (S[0],), (S[1],)
        n = ring.dim(2 * D)
        asm.equation(("glue", S), n, {("s", i): _window_space(ring, i, D).evaluate(ring, S, D),
                                       ("s", j): -_window_space(ring, j, D).evaluate(ring, S, D)})
        blocks["glue"] += n
    for S in singles:
        n = ring.dim(D)
        asm.equation(("trace", S), n, {("s", S): _trace_space(ring, S, D).evaluate(ring, S, D)},
                     _one(ring, S, D))
        blocks["trace"] += n
    return asm, SplittingProblem(1, D, {"s": D}, blocks, {"s": asm.ncols})


def splitting_feasible(model: HypersurfaceModel, m: int, D: int, samples: int = 20,
                       seed: int = 0) -> SplittingResult:
    """Solve the level-m splitting system at truncation D and verify any solution."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if model.is_curve:
        asm, prob = _curve_system(model, m, D)
    else:
        if m != 1:
            raise HeightError("splitting systems beyond m = 1 are implemented for curves only")
        asm, prob = _glue_system(model, D)
    A, b = asm.build()
    x = solve_mod_p(A, b, model.p)
    if x is None:
        return SplittingResult(False, prob)
    parts = asm.split(x)
    ring = model.ring
    W = prob.windows
    cert = SplittingCertificate(m, D, {})
    for (fam, S), vec in parts.items():
        pole = W[fam]
        getattr(cert, fam)[S] = _as_function(ring, S, pole, vec)
    cert.checks = verify_certificate(model, cert, samples=samples, seed=seed)
    if not cert.verified:
        failed = [k for k, v in cert.checks.items() if not v]
        raise HeightError(f"splitting certificate failed re-verification: {failed}")
    return SplittingResult(True, prob, cert)


# ---------------------------------------------------------------------------
# certificate verification


def _random_function(ring, S, D, rng):
    mons = window_monomials(ring, S, D)
    return ChartFunction.from_laurent(ring, S, mons, rng.integers(0, ring.p, mons.shape[0]), D)


def _random_witt(ring, S, m, D, rng):
    return WittVector([_random_function(ring, S, D, rng) for _ in range(m)], ring.p)


def evaluate_splitting(cert: SplittingCertificate, i: tuple, w: WittVector) -> ChartFunction:
    """phi_i(w) for w with coordinates on a chart containing i."""
    S = w.coords[0].chart
    s = cert.s[i].restrict(S)
    val = cartier_trace(s * w.coords[0])
    if cert.h:
        h = cert.h[i].restrict(S)
        val = val - cartier_trace(h * d_m(w).coeff, cert.m)
    return val


def verify_certificate(model: HypersurfaceModel, cert: SplittingCertificate,
                       samples: int = 20, seed: int = 0) -> dict:
    ring, p, m = model.ring, model.p, cert.m
    rng = np.random.default_rng(seed)
    checks = {}
    # the constraint blocks, recomputed with chart-function arithmetic
    ok = True
    for S in model.charts(0):
        ok &= cartier_trace(cert.s[S]) == 1
    checks["normalization"] = bool(ok)
    ok = True
    for S in model.charts(1):
        i, j = (S[0],), (S[1],)
        si, sj = cert.s[i].restrict(S), cert.s[j].restrict(S)
        if cert.h:
            r, a = cert.r[S], cert.a[S]
            ok &= derivation(r) == si - sj
            lhs = cert.h[i].restrict(S) - cert.h[j].restrict(S)
            ok &= lhs == a.frobenius(m) - r.frobenius(m - 1)
        else:
            ok &= si == sj
    checks["gluing_data"] = bool(ok)
    # sampled identities of the maps themselves
    lin = add = frob = glue = True
    for k in range(samples):
        i = model.charts(0)[k % model.N]
        w = _random_witt(ring, i, m, 1, rng)
        v = _random_witt(ring, i, m, 1, rng)
        fv = frobenius_witt(v)
        frob &= evaluate_splitting(cert, i, fv) == v.coords[0]
        lin &= evaluate_splitting(cert, i, witt_mul(fv, w)) == v.coords[0] * evaluate_splitting(cert, i, w)
        add &= (evaluate_splitting(cert, i, witt_add(w, v))
                == evaluate_splitting(cert, i, w) + evaluate_splitting(cert, i, v))
        S = model.charts(1)[k % len(model.charts(1))]
        u = _random_witt(ring, S, m, 1, rng)
        glue &= evaluate_splitting(cert, (S[0],), u) == evaluate_splitting(cert, (S[1],), u)
    checks["phi_F_is_R"] = bool(frob)
    checks["linearity"] = bool(lin)
    checks["additivity"] = bool(add)
    checks["overlap_agreement"] = bool(glue)
    return checks


# ---------------------------------------------------------------------------
# the quasi-F-split height


@dataclass
class LevelAttempt:
    m: int
    D: int
    feasible: bool
    shape: tuple


def qfs_height(model: HypersurfaceModel, mmax: int, schedule=None, samples: int = 20):
    """Smallest m with a verified splitting; returns (HeightValue, attempts, certificate)."""
    schedule = tuple(schedule or model.default_schedule())
    attempts = []
    top = mmax if model.is_curve else 1
    for m in range(1, top + 1):
        misses = 0
        for D in schedule:
            res = splitting_feasible(model, m, D, samples=samples)
            attempts.append(LevelAttempt(m, D, res.feasible, res.problem.shape))
            if res.feasible:
                return HeightValue(m), attempts, res.certificate
            misses += 1
            if misses >= 2:
                break
        if misses < 2:
            return HeightValue(reason=f"level {m} infeasible at fewer than two schedule points"), attempts, None
    if top < mmax:
        return HeightValue(lower=top + 1, reason="levels above 1 need the curve solver"), attempts, None
    return HeightValue(lower=mmax + 1), attempts, None


# ---------------------------------------------------------------------------
# the report


@dataclass
class HeightReport:
    p: int
    nvars: int
    f: str
    mmax: int
    schedule: tuple
    artin_mazur: HeightValue
    qfs: HeightValue
    profile: CohomologyProfile | None
    hasse: int | None
    theorem_check: str
    checks: dict
    attempts: list = field(default_factory=list)
    status: str = "ok"
    wall_time: float = 0.0

    @property
    def ordinary(self) -> bool | None:
        return None if self.hasse is None else self.hasse != 0

    @property
    def D_final(self) -> int:
        ds = list(self.profile.D_final) if self.profile else []
        ds += [a.D for a in self.attempts]
        return max(ds) if ds else 0

    def record(self) -> str:
        """Key-value text record, one field per line, fixed order."""
        prof = self.profile
        lines = [
            ("p", self.p),
            ("vars", self.nvars),
            ("f", self.f),
            ("mmax", self.mmax),
            ("schedule", ",".join(map(str, self.schedule))),
            ("status", self.status),
            ("hasse", "" if self.hasse is None else self.hasse),
            ("ordinary", {None: "", True: "yes", False: "no"}[self.ordinary]),
            ("artin_mazur", self.artin_mazur),
            ("qfs_height", self.qfs),
            ("profile_top", ",".join(map(str, prof.top)) if prof else ""),
            ("profile_lower", ",".join(map(str, prof.lower)) if prof else ""),
            ("profile_D", ",".join(map(str, prof.D_final)) if prof else ""),
            ("profile_method", prof.method if prof else ""),
            ("splitting", ";".join(f"m{a.m}@D{a.D}:{'feasible' if a.feasible else 'infeasible'}"
                                   for a in self.attempts)),
            ("D_final", self.D_final),
            ("checks", ",".join(f"{k}:{'ok' if v else 'FAIL'}" for k, v in sorted(self.checks.items()))),
            ("theorem_check", self.theorem_check),
        ]
        return "".join(f"{k}={v}\n" for k, v in lines)

    def csv_row(self, mmax: int | None = None) -> list:
        mmax = mmax or self.mmax
        top = list(self.profile.top) if self.profile else []
        ds = [str(top[k]) if k < len(top) else "" for k in range(mmax)]
        return [self.p, self.f, str(self.artin_mazur), str(self.qfs),
                "" if self.hasse is None else self.hasse, *ds, self.D_final,
                self.theorem_check, self.status]

    def as_dict(self) -> dict:
        prof = self.profile
        return {
            "p": self.p, "vars": self.nvars, "f": self.f, "mmax": self.mmax,
            "schedule": list(self.schedule), "status": self.status,
            "hasse": self.hasse, "artin_mazur": str(self.artin_mazur),
            "qfs_height": str(self.qfs),
            "profile_top": prof.top if prof else None,
            "profile_lower": prof.lower if prof else None,
            "profile_D": prof.D_final if prof else None,
            "splitting": [{"m": a.m, "D": a.D, "feasible": a.feasible} for a in self.attempts],
            "D_final": self.D_final, "checks": dict(sorted(self.checks.items())),
            "theorem_check": self.theorem_check, "wall_time": round(self.wall_time, 3),
        }


def _theorem_verdict(am: HeightValue, qs: HeightValue) -> str:
    if am.finite and qs.finite:
        return "agree" if am.value == qs.value else "disagree"
    if am.finite and qs.lower is not None and am.value < qs.lower:
        return "disagree"
    if qs.finite and am.lower is not None and qs.value < am.lower:
        return "disagree"
    return "inconclusive"


def verify_main_theorem(model: HypersurfaceModel, mmax: int, schedule=None,
                        samples: int = 20) -> HeightReport:
    t0 = time.perf_counter()
    schedule = tuple(schedule or model.default_schedule())
    am, prof = artin_mazur_height(model, mmax, schedule)
    qs, attempts, cert = qfs_height(model, mmax, schedule, samples=samples)
    hasse = int(hasse_coefficient(model))
    checks = {}
    if prof is not None and am.finite:
        law = [min(m, am.value - 1) for m in range(1, prof.mmax + 1)]
        checks["profile_law_top"] = prof.top == law
        checks["profile_law_lower"] = prof.lower == law
    if prof is not None:
        checks["profile_monotone"] = all(a <= b for a, b in zip(prof.top, prof.top[1:]))
        checks["profile_bounded"] = all(d <= m for m, d in enumerate(prof.top, start=1))
    if am.finite or am.lower is not None:
        checks["height_one_iff_ordinary"] = (am.value == 1) == (hasse != 0)
    if qs.finite or qs.lower is not None:
        checks["split_iff_ordinary"] = (qs.value == 1) == (hasse != 0)
    if cert is not None:
        checks["certificate"] = cert.verified
    verdict = _theorem_verdict(am, qs)
    return HeightReport(model.p, model.N, model.describe(), mmax, schedule, am, qs, prof, hasse,
                        verdict, checks, attempts, "ok", time.perf_counter() - t0)
