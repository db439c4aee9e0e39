import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyheight import linalg
from cyheight.exactalg.fp import FpScalar, check_prime, is_prime
from cyheight.exactalg.mpoly import MPoly, PolyParseError, format_poly, parse_poly
from cyheight.exactalg.normal import normal_form

PRIMES = [2, 3, 5, 7, 11, 13]


def test_is_prime_small():
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


@pytest.mark.parametrize("bad", [0, 1, 4, 9, -3])
def test_check_prime_rejects(bad):
    with pytest.raises(ValueError):
        check_prime(bad)


@given(st.sampled_from(PRIMES), st.integers(), st.integers(), st.integers())
def test_fp_field_laws(p, a, b, c):
    x, y, z = FpScalar(a, p), FpScalar(b, p), FpScalar(c, p)
    assert x + y == y + x
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x - x == 0
    if x:
        assert x * x.inverse() == 1
        assert x ** (p - 1) == 1


def test_fp_is_immutable():
    x = FpScalar(3, 5)
    with pytest.raises(AttributeError):
        x.value = 1


def _rand_poly(draw, nvars, p, deg):
    exps = draw(st.lists(st.tuples(*[st.integers(0, deg)] * nvars), max_size=5))
    coefs = draw(st.lists(st.integers(0, p - 1), min_size=len(exps), max_size=len(exps)))
    return MPoly({e: c for e, c in zip(exps, coefs)}, nvars, p)


@st.composite
def polys(draw, p=7):
    return tuple(_rand_poly(draw, 3, p, 3) for _ in range(3))


@settings(max_examples=60, deadline=None)
@given(polys())
def test_mpoly_ring_laws(fgh):
    f, g, h = fgh
    assert f + g == g + f
    assert f * g == g * f
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert f - f == MPoly.zero(3, 7)


@settings(max_examples=40, deadline=None)
@given(polys())
def test_parse_format_roundtrip(fgh):
    f = fgh[0]
    assert parse_poly(format_poly(f), 3, 7) == f


def test_parse_errors():
    with pytest.raises(PolyParseError):
        parse_poly("x^", 3, 5)
    with pytest.raises(PolyParseError):
        parse_poly("x*q", 3, 5)


def test_derivative_product_rule():
    f = parse_poly("x^2*y+3*z^3", 3, 7)
    g = parse_poly("x*y*z+y^3", 3, 7)
    for i in range(3):
        assert (f * g).derivative(i) == f.derivative(i) * g + f * g.derivative(i)


@settings(max_examples=30, deadline=None)
@given(polys(5))
def test_normal_form_properties(fgh):
    f = parse_poly("y^2*z-x^3-x*z^2", 3, 5)
    g, h, _ = fgh
    r = normal_form(g, f)
    assert normal_form(r, f) == r
    assert normal_form(g + h * f, f) == r


def _rank_bruteforce(A, p):
    # size of the column space is p^rank
    rows, cols = A.shape
    image = set()
    for x in itertools.product(range(p), repeat=cols):
        image.add(tuple((A @ np.array(x)) % p))
    return round(np.log(len(image)) / np.log(p))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.integers(1, 4), st.integers(1, 4), st.data())
def test_rank_against_enumeration(p, r, c, data):
    vals = data.draw(st.lists(st.integers(0, p - 1), min_size=r * c, max_size=r * c))
    A = np.array(vals, dtype=np.int64).reshape(r, c)
    assert linalg.rank_mod_p(A, p) == _rank_bruteforce(A, p)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([5, 7, 13]), st.integers(1, 7), st.integers(1, 7), st.integers(0, 10 ** 6))
def test_nullspace_and_solve(p, r, c, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, p, (r, c))
    K = linalg.nullspace_mod_p(A, p)
    assert K.shape[1] == c - linalg.rank_mod_p(A, p)
    assert not ((A @ K) % p).any()
    x0 = rng.integers(0, p, c)
    x = linalg.solve_mod_p(A, (A @ x0) % p, p)
    assert x is not None and not ((A @ x - A @ x0) % p).any()


def test_solve_inconsistent():
    A = np.array([[1, 0], [1, 0]])
    assert linalg.solve_mod_p(A, np.array([0, 1]), 5) is None


def test_numba_and_numpy_echelon_agree():
    rng = np.random.default_rng(3)
    inv = linalg._inverse_table(11)
    for _ in range(5):
        A = rng.integers(0, 11, (9, 12)).astype(np.int64)
        A[3] = (2 * A[1] + A[2]) % 11
        Ma, Mb = A.copy(), A.copy()
        pa = linalg._echelon_numpy(Ma, 11, inv, True)
        pb = linalg._echelon_numba(Mb, np.int64(11), inv, True)
        assert np.array_equal(pa, pb)
        assert np.array_equal(Ma, Mb)


def test_numpy_fallback_selected_by_env():
    import os
    import subprocess
    import sys
    code = ("from cyheight import _accel; from cyheight.linalg import rank_mod_p; "
            "import numpy as np; print(_accel.backend(), rank_mod_p(np.array([[1,2],[2,4]]), 5))")
    env = dict(os.environ, CYHEIGHT_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "1"]
