import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyheight.exactalg.fp import FpScalar
from cyheight.exactalg.mpoly import MPoly
from cyheight.wittcore import (
    WittError, WittVector, frobenius_witt, ghost, ghost_inverse, one_vector, restriction,
    scalar_multiple, teichmuller, verify_ghost_identities, verschiebung, vt_decompose,
    vt_reconstruct, witt_add, witt_batch, witt_mul, witt_structural_polys, zero_vector,
)


def fp_vec(vals, p):
    return WittVector([FpScalar(v, p) for v in vals], p)


def int_vec(vals, p):
    return WittVector(list(vals), p, 0)


def reduce(w, p):
    return fp_vec([c % p for c in w.coords], p)


@st.composite
def witt_pair(draw):
    p = draw(st.sampled_from([2, 3, 5]))
    m = draw(st.sampled_from([1, 2, 3]))
    a = draw(st.lists(st.integers(0, p - 1), min_size=m, max_size=m))
    b = draw(st.lists(st.integers(0, p - 1), min_size=m, max_size=m))
    return p, a, b


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_ghost_identities_exact(p, m):
    assert verify_ghost_identities(witt_structural_polys(p, m))


def test_known_structural_polynomial():
    sp = witt_structural_polys(2, 2)
    X0, X1, Y0, Y1 = (MPoly.var(i, 4) for i in range(4))
    assert sp.sum_polys[1] == X1 + Y1 - X0 * Y0
    assert sp.prod_polys[1] == X0 ** 2 * Y1 + X1 * Y0 ** 2 + 2 * X1 * Y1


@settings(max_examples=80, deadline=None)
@given(witt_pair())
def test_mod_p_matches_integer_witt(pab):
    # reduce the characteristic-0 computation: an oracle that never touches the mod-p polys
    p, a, b = pab
    s = witt_add(int_vec(a, p), int_vec(b, p))
    t = witt_mul(int_vec(a, p), int_vec(b, p))
    assert witt_add(fp_vec(a, p), fp_vec(b, p)) == reduce(s, p)
    assert witt_mul(fp_vec(a, p), fp_vec(b, p)) == reduce(t, p)


@settings(max_examples=60, deadline=None)
@given(witt_pair())
def test_ghost_is_a_ring_map(pab):
    p, a, b = pab
    u, v = int_vec(a, p), int_vec(b, p)
    assert ghost(u + v) == [x + y for x, y in zip(ghost(u), ghost(v))]
    assert ghost(u * v) == [x * y for x, y in zip(ghost(u), ghost(v))]
    assert ghost_inverse(ghost(u), p) == u


@pytest.mark.parametrize("p,m", [(2, 3), (3, 2), (5, 2), (3, 3)])
def test_unit_and_characteristic(p, m):
    one = fp_vec([1] + [0] * (m - 1), p)
    zero = fp_vec([0] * m, p)
    assert scalar_multiple(p ** m, one) == zero
    assert scalar_multiple(p ** (m - 1), one) != zero


@settings(max_examples=60, deadline=None)
@given(witt_pair())
def test_frobenius_verschiebung(pab):
    p, a, b = pab
    w = fp_vec(a, p)
    m = w.length
    pw = scalar_multiple(p, w)
    # in characteristic p: F V = V F = p on W_{m+1}, and V F(w) truncates to p*w
    assert frobenius_witt(verschiebung(w)) == verschiebung(frobenius_witt(w))
    assert restriction(verschiebung(frobenius_witt(w))) == pw
    if m < 3:
        assert scalar_multiple(p, fp_vec(a + [0], p)) == verschiebung(frobenius_witt(w))
    assert frobenius_witt(witt_add(w, fp_vec(b, p))) == witt_add(frobenius_witt(w), frobenius_witt(fp_vec(b, p)))
    if m > 1:
        v = fp_vec(b, p)
        assert restriction(w + v) == restriction(w) + restriction(v)
        assert restriction(w * v) == restriction(w) * restriction(v)
        assert restriction(frobenius_witt(w)) == frobenius_witt(restriction(w))


def test_vt_decomposition_with_polynomials():
    p, m = 3, 3
    xs = [MPoly.var(i, m, p) for i in range(m)]
    w = WittVector(xs, p)
    assert vt_decompose(w) == xs
    assert vt_reconstruct(xs, p) == w


def test_teichmuller_is_multiplicative():
    p = 5
    for a in range(p):
        for b in range(p):
            ta = teichmuller(FpScalar(a, p), p, 3)
            tb = teichmuller(FpScalar(b, p), p, 3)
            assert ta * tb == teichmuller(FpScalar(a * b, p), p, 3)


def test_length_mismatch():
    with pytest.raises(WittError):
        fp_vec([1, 2], 5) + fp_vec([1], 5)
    with pytest.raises(WittError):
        restriction(fp_vec([1], 5))


def test_identities_over_polynomial_coordinates():
    p = 2
    x = WittVector([MPoly.var(0, 4, p), MPoly.var(1, 4, p)], p)
    y = WittVector([MPoly.var(2, 4, p), MPoly.var(3, 4, p)], p)
    one = one_vector(p, 2, x.coords[0])
    zero = zero_vector(p, 2, x.coords[0])
    assert x * one == x
    assert x + zero == x
    assert x - x == zero
    assert x * y == y * x


def test_batch_matches_scalar_ops():
    rng = np.random.default_rng(0)
    for p, m in [(2, 3), (3, 3), (5, 2), (7, 2)]:
        W = rng.integers(0, p, (50, m))
        V = rng.integers(0, p, (50, m))
        S = witt_batch("sum", W, V, p)
        P = witt_batch("prod", W, V, p)
        for k in range(50):
            w, v = fp_vec(W[k].tolist(), p), fp_vec(V[k].tolist(), p)
            assert [int(c) for c in (w + v).coords] == S[k].tolist()
            assert [int(c) for c in (w * v).coords] == P[k].tolist()
