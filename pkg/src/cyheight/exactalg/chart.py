"""Functions on the standard affine charts of a projective hypersurface.

A chart is a sorted tuple ``S`` of variable indices; on ``U_S`` every
``x_i`` with ``i`` in ``S`` is invertible.  A chart function is stored as
``G / (prod_{i in S} x_i)^E`` with ``G`` a degree ``|S|*E`` element of the
quotient ring in normal form.  ``E`` is the pole bound; the truncation window
of pole bound ``D`` on ``U_S`` is exactly ``x_S^{-D} * R_{|S| D}``.
"""
from __future__ import annotations

import numpy as np

from .mpoly import MPoly
from .ring import HyperRing, combine_terms


def as_chart(S) -> tuple:
    S = tuple(sorted(set(int(i) for i in S)))
    if not S:
        raise ValueError("a chart needs at least one invertible variable")
    return S


class ChartFunction:
    """Degree-zero rational function on ``U_S``, normalized modulo f."""

    __slots__ = ("ring", "chart", "pole", "vec")

    def __init__(self, ring: HyperRing, chart, pole: int, vec):
        self.ring = ring
        self.chart = as_chart(chart)
        self.pole = int(pole)
        vec = np.asarray(vec, dtype=np.int64) % ring.p
        if vec.shape != (ring.dim(len(self.chart) * self.pole),):
            raise ValueError("numerator vector has the wrong size for this pole bound")
        self.vec = vec
        self.vec.setflags(write=False)

    # constructors ---------------------------------------------------------------
    @classmethod
    def constant(cls, ring, chart, c=1):
        chart = as_chart(chart)
        vec = np.zeros(1, dtype=np.int64)
        vec[0] = c % ring.p
        return cls(ring, chart, 0, vec)

    @classmethod
    def from_laurent(cls, ring, chart, exps, coeffs, pole=None):
        """Sum of Laurent monomials ``coeffs[k] * x^exps[k]`` (total degree 0)."""
        chart = as_chart(chart)
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, ring.N)
        coeffs = np.asarray(coeffs, dtype=np.int64).reshape(-1) % ring.p
        if exps.shape[0] and np.any(exps.sum(axis=1) != 0):
            raise ValueError("chart functions have total degree 0")
        mask = np.zeros(ring.N, dtype=bool)
        mask[list(chart)] = True
        if exps.shape[0] and np.any(exps[:, ~mask] < 0):
            raise ValueError("negative exponent outside the chart")
        need = int(max(0, -exps[:, mask].min())) if exps.shape[0] else 0
        if pole is None:
            pole = need
        elif pole < need:
            raise ValueError(f"pole bound {pole} too small (need {need})")
        shift = np.zeros(ring.N, dtype=np.int64)
        shift[mask] = pole
        exps, coeffs = combine_terms(exps, coeffs, ring.p)
        vec = ring.nf_monomials(exps + shift, coeffs, len(chart) * pole)
        return cls(ring, chart, pole, vec)

    @classmethod
    def from_fraction(cls, ring, chart, numerator: MPoly, denominator_exps):
        """``numerator / x^denominator_exps`` with the denominator supported on the chart."""
        chart = as_chart(chart)
        den = np.asarray(denominator_exps, dtype=np.int64)
        if any(den[i] for i in range(ring.N) if i not in chart):
            raise ValueError("denominator must be a monomial in the chart variables")
        if numerator.total_degree() not in (-1, int(den.sum())):
            raise ValueError("numerator and denominator degrees differ")
        exps = np.array(list(numerator.terms.keys()), dtype=np.int64).reshape(-1, ring.N) - den
        coeffs = np.array(list(numerator.terms.values()), dtype=np.int64)
        return cls.from_laurent(ring, chart, exps, coeffs)

    # representation ---------------------------------------------------------------
    @property
    def p(self):
        return self.ring.p

    def _shift(self, k: int) -> np.ndarray:
        beta = np.zeros(self.ring.N, dtype=np.int64)
        beta[list(self.chart)] = k
        return beta

    def with_pole(self, pole: int) -> "ChartFunction":
        if pole == self.pole:
            return self
        if pole < self.pole:
            raise ValueError("cannot lower the pole bound by re-representation")
        vec = self.ring.mul_monomial(self.vec, len(self.chart) * self.pole,
                                     self._shift(pole - self.pole))
        return ChartFunction(self.ring, self.chart, pole, vec)

    def coords(self, pole: int) -> np.ndarray:
        """Coordinates in the window basis of the given pole bound."""
        return self.with_pole(pole).vec

    @property
    def numerator(self) -> MPoly:
        return self.ring.vec_to_poly(self.vec, len(self.chart) * self.pole)

    @property
    def denominator(self) -> MPoly:
        return MPoly.monomial(self._shift(self.pole).tolist(), 1, self.p)

    def laurent_terms(self):
        """Exponent/coefficient arrays of the numerator divided by the denominator."""
        exps, coef = self.ring.vec_to_arrays(self.vec, len(self.chart) * self.pole)
        return exps - self._shift(self.pole), coef

    def min_pole(self) -> int:
        """Smallest per-variable pole bound of this representation's terms."""
        exps, _ = self.laurent_terms()
        if exps.shape[0] == 0:
            return 0
        return int(max(0, -exps[:, list(self.chart)].min()))

    def is_zero(self) -> bool:
        return not self.vec.any()

    # arithmetic ---------------------------------------------------------------------
    def _align(self, other):
        if not isinstance(other, ChartFunction):
            if isinstance(other, int):
                other = ChartFunction.constant(self.ring, self.chart, other)
            else:
                return None, None
        if other.ring is not self.ring:
            raise ValueError("functions on different hypersurfaces")
        if other.chart != self.chart:
            T = as_chart(self.chart + other.chart)
            return self.restrict(T)._align(other.restrict(T))
        E = max(self.pole, other.pole)
        return self.with_pole(E), other.with_pole(E)

    def __add__(self, other):
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        return ChartFunction(a.ring, a.chart, a.pole, a.vec + b.vec)

    __radd__ = __add__

    def __neg__(self):
        return ChartFunction(self.ring, self.chart, self.pole, -self.vec)

    def __sub__(self, other):
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        return ChartFunction(a.ring, a.chart, a.pole, a.vec - b.vec)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return ChartFunction(self.ring, self.chart, self.pole, self.vec * (other % self.p))
        a, b = self._align(other)
        if a is None:
            return NotImplemented
        k = len(a.chart)
        vec = a.ring.mul(a.vec, k * a.pole, b.vec, k * b.pole)
        return ChartFunction(a.ring, a.chart, 2 * a.pole, vec)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers of chart functions are not supported")
        result = ChartFunction.constant(self.ring, self.chart, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def frobenius(self, k: int = 1) -> "ChartFunction":
        """``g^(p^k)``; linear over F_p, computed termwise."""
        exps, coef = self.laurent_terms()
        q = self.p ** k
        return ChartFunction.from_laurent(self.ring, self.chart, exps * q, coef, self.pole * q)

    def restrict(self, T) -> "ChartFunction":
        return chart_transition(self, T)

    def __eq__(self, other):
        if isinstance(other, int):
            other = ChartFunction.constant(self.ring, self.chart, other)
        if not isinstance(other, ChartFunction):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("ChartFunction is not hashable (equality is up to representation)")

    def __repr__(self):
        num = self.numerator
        return f"ChartFunction(S={self.chart}, ({num}) / x_S^{self.pole})"


def chart_transition(g: ChartFunction, T) -> ChartFunction:
    """Restriction of ``g`` from ``U_S`` to the smaller open ``U_T`` (``S <= T``)."""
    T = as_chart(T)
    if not set(g.chart) <= set(T):
        raise ValueError(f"chart {g.chart} is not contained in {T}")
    if T == g.chart:
        return g
    beta = np.zeros(g.ring.N, dtype=np.int64)
    beta[[i for i in T if i not in g.chart]] = g.pole
    vec = g.ring.mul_monomial(g.vec, len(g.chart) * g.pole, beta)
    return ChartFunction(g.ring, T, g.pole, vec)


def truncated_basis(ring: HyperRing, chart, pole_bound: int) -> list[ChartFunction]:
    """Basis ``x^b / x_S^D`` of the window with per-variable pole bound ``D``."""
    chart = as_chart(chart)
    e = len(chart) * pole_bound
    n = ring.dim(e)
    out = []
    for k in range(n):
        vec = np.zeros(n, dtype=np.int64)
        vec[k] = 1
        out.append(ChartFunction(ring, chart, pole_bound, vec))
    return out


def window_monomials(ring: HyperRing, chart, pole_bound: int) -> np.ndarray:
    """Laurent exponents of the window basis (one row per basis element)."""
    chart = as_chart(chart)
    B = ring.basis(len(chart) * pole_bound).copy()
    B[:, list(chart)] -= pole_bound
    return B
