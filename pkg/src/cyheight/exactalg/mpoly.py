"""Sparse multivariate polynomials over Z or F_p.

Terms are stored as a dict ``{exponent tuple: int}`` with no zero
coefficients; over F_p the coefficients are kept in ``[0, p)`` so equal
polynomials have equal dicts.  The global monomial order is graded
lexicographic with ``x0 > x1 > ...``.
"""
from __future__ import annotations

import re
from typing import Iterable

from .fp import check_prime

VAR_ALIASES = {"x": 0, "y": 1, "z": 2, "w": 3}


def grlex_key(e: tuple) -> tuple:
    return (sum(e), e)


class MPoly:
    """Immutable sparse polynomial.

    ``modulus=None`` means integer coefficients.  Variables listed in
    ``invertible`` may carry negative exponents (Laurent monomials on a chart).
    """

    __slots__ = ("nvars", "modulus", "terms", "invertible", "_hash")

    def __init__(self, terms: dict, nvars: int, modulus: int | None = None,
                 invertible: Iterable[int] = (), _clean: bool = False):
        self.nvars = nvars
        self.modulus = modulus
        self.invertible = frozenset(invertible)
        if _clean:
            self.terms = terms
        else:
            clean = {}
            for e, c in terms.items():
                e = tuple(int(a) for a in e)
                if len(e) != nvars:
                    raise ValueError(f"exponent {e} has wrong length (expected {nvars})")
                c = int(c)
                if modulus is not None:
                    c %= modulus
                if c:
                    clean[e] = clean.get(e, 0) + c
            if modulus is not None:
                clean = {e: c % modulus for e, c in clean.items() if c % modulus}
            self.terms = clean
        for e in self.terms:
            for i, a in enumerate(e):
                if a < 0 and i not in self.invertible:
                    raise ValueError(f"negative exponent on non-invertible variable x{i}")
        self._hash = None

    # construction helpers -------------------------------------------------
    @classmethod
    def zero(cls, nvars, modulus=None):
        return cls({}, nvars, modulus, _clean=True)

    @classmethod
    def constant(cls, c, nvars, modulus=None):
        return cls({(0,) * nvars: c}, nvars, modulus)

    @classmethod
    def monomial(cls, exps, c=1, modulus=None, invertible=()):
        return cls({tuple(exps): c}, len(exps), modulus, invertible)

    @classmethod
    def var(cls, i, nvars, modulus=None):
        e = [0] * nvars
        e[i] = 1
        return cls({tuple(e): 1}, nvars, modulus, _clean=True)

    def _new(self, terms, invertible=None):
        inv = self.invertible if invertible is None else invertible
        return MPoly(terms, self.nvars, self.modulus, inv, _clean=True)

    def _check(self, other):
        if not isinstance(other, MPoly):
            return False
        if other.nvars != self.nvars or other.modulus != self.modulus:
            raise ValueError("incompatible polynomials")
        return True

    def _reduce(self, c):
        return c % self.modulus if self.modulus is not None else c

    # ring operations ---------------------------------------------------------
    def __add__(self, other):
        if not self._check(other):
            if isinstance(other, int):
                other = MPoly.constant(other, self.nvars, self.modulus)
            else:
                return NotImplemented
        t = dict(self.terms)
        for e, c in other.terms.items():
            v = self._reduce(t.get(e, 0) + c)
            if v:
                t[e] = v
            else:
                t.pop(e, None)
        return self._new(t, self.invertible | other.invertible)

    __radd__ = __add__

    def __neg__(self):
        return self._new({e: self._reduce(-c) for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = MPoly.constant(other, self.nvars, self.modulus)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            c0 = self._reduce(other)
            if not c0:
                return MPoly.zero(self.nvars, self.modulus)
            return self._new({e: self._reduce(c * c0) for e, c in self.terms.items()})
        if not self._check(other):
            return NotImplemented
        t: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        if self.modulus is not None:
            t = {e: c % self.modulus for e, c in t.items() if c % self.modulus}
        else:
            t = {e: c for e, c in t.items() if c}
        return self._new(t, self.invertible | other.invertible)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not supported")
        result = MPoly.constant(1, self.nvars, self.modulus)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, int):
            return self == MPoly.constant(other, self.nvars, self.modulus)
        if not isinstance(other, MPoly):
            return NotImplemented
        return (self.nvars == other.nvars and self.modulus == other.modulus
                and self.terms == other.terms)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, self.modulus, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    # inspection ---------------------------------------------------------------
    def sorted_terms(self):
        """Terms in decreasing grlex order (the canonical ordering)."""
        return sorted(self.terms.items(), key=lambda t: grlex_key(t[0]), reverse=True)

    def leading_term(self):
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        return max(self.terms.items(), key=lambda t: grlex_key(t[0]))

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def coefficient(self, exps) -> int:
        return self.terms.get(tuple(exps), 0)

    def reduce_mod(self, p: int) -> "MPoly":
        return MPoly(self.terms, self.nvars, p, self.invertible)

    def lift(self) -> "MPoly":
        """Same terms viewed over the integers (representatives in [0, p))."""
        return MPoly(self.terms, self.nvars, None, self.invertible, _clean=True)

    def derivative(self, i: int) -> "MPoly":
        t = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                v = self._reduce(c * e[i])
                if v:
                    t[tuple(e2)] = v
        return self._new(t)

    def substitute(self, values, one=1):
        """Evaluate with ``values[i]`` in place of ``x_i`` (any ring elements)."""
        cache: dict = {}

        def power(i, k):
            key = (i, k)
            if key not in cache:
                if k == 0:
                    cache[key] = one
                elif k == 1:
                    cache[key] = values[i]
                else:
                    half = power(i, k // 2)
                    sq = half * half
                    cache[key] = sq * values[i] if k % 2 else sq
            return cache[key]

        total = None
        for e, c in self.sorted_terms():
            term = None
            for i, k in enumerate(e):
                if k:
                    term = power(i, k) if term is None else term * power(i, k)
            if term is None:
                term = one
            term = term * c if c != 1 else term
            total = term if total is None else total + term
        return total if total is not None else one * 0

    def __repr__(self):
        return f"MPoly({format_poly(self)!r}, modulus={self.modulus})"

    def __str__(self):
        return format_poly(self)


def _var_name(i: int, nvars: int) -> str:
    if nvars <= 4:
        return "xyzw"[i]
    return f"x{i}"


def format_poly(f: MPoly) -> str:
    if not f.terms:
        return "0"
    parts = []
    for e, c in f.sorted_terms():
        mono = "*".join(
            _var_name(i, f.nvars) + (f"^{a}" if a != 1 else "")
            for i, a in enumerate(e) if a
        )
        if f.modulus is None and c < 0:
            sign, c = "-", -c
        else:
            sign = "+"
        if not mono:
            body = str(c)
        elif c == 1:
            body = mono
        else:
            body = f"{c}*{mono}"
        parts.append((sign, body))
    out = parts[0][1] if parts[0][0] == "+" else "-" + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


_TOKEN = re.compile(r"\s*(?:(\d+)|(x\d|[xyzw])|(\^)|([-+*()]))")


class PolyParseError(ValueError):
    pass


def parse_poly(text: str, nvars: int, modulus: int | None = None) -> MPoly:
    """Parse ``"y^2*z - x^3 - x*z^2"`` style input.

    Variables ``x0..x9`` (aliases ``x y z w``), ``^`` for powers, ``*`` optional,
    parentheses allowed.  Integer coefficients are reduced mod ``modulus``.
    """
    if modulus is not None:
        check_prime(modulus)
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolyParseError(f"unexpected character {text[pos]!r} at position {pos}")
        tokens.append((m.group(1), m.group(2), m.group(3), m.group(4)))
        pos = m.end()
    if not tokens:
        raise PolyParseError("empty polynomial")
    idx = 0

    def peek():
        return tokens[idx] if idx < len(tokens) else (None, None, None, None)

    def take():
        nonlocal idx
        tok = peek()
        idx += 1
        return tok

    def atom():
        num, var, caret, op = take()
        if num is not None:
            return MPoly.constant(int(num), nvars, modulus)
        if var is not None:
            i = VAR_ALIASES[var] if var in VAR_ALIASES else int(var[1:])
            if i >= nvars:
                raise PolyParseError(f"variable {var} out of range for {nvars} variables")
            return MPoly.var(i, nvars, modulus)
        if op == "(":
            val = expr()
            if take()[3] != ")":
                raise PolyParseError("unbalanced parenthesis")
            return val
        raise PolyParseError("expected a number, variable or '('")

    def factor():
        base = atom()
        if peek()[2] is not None:
            take()
            num = take()[0]
            if num is None:
                raise PolyParseError("exponent must be a non-negative integer")
            base = base ** int(num)
        return base

    def term():
        val = factor()
        while True:
            num, var, caret, op = peek()
            if op == "*":
                take()
                val = val * factor()
            elif num is not None or var is not None or op == "(":
                val = val * factor()
            else:
                return val

    def expr():
        num, var, caret, op = peek()
        neg = False
        if op in ("+", "-"):
            take()
            neg = op == "-"
        val = term()
        if neg:
            val = -val
        while True:
            op = peek()[3]
            if op == "+":
                take()
                val = val + term()
            elif op == "-":
                take()
                val = val - term()
            else:
                return val

    result = expr()
    if idx != len(tokens):
        raise PolyParseError(f"trailing input after token {idx}")
    return result
