import pytest

from cyheight.cech import (
    CURVE_SCHEDULE, HypersurfaceModel, ModelError, NonStabilized, Sheaf, cech_complex,
    check_dd_zero, cohomology_dims, cohomology_profile, dump_complex, is_smooth, stabilize,
)
from cyheight.exactalg.mpoly import parse_poly


@pytest.mark.parametrize("text,p,nvars,kind", [
    ("x^3+y^3+z^3", 4, 3, "prime"),
    ("x^3+y^2+z^3", 5, 3, "not-homogeneous"),
    ("x^4+y^4+z^4", 5, 3, "degree"),
    ("x^3+y^3+z^3", 3, 3, "singular"),
    ("y^2*z-x^3", 5, 3, "singular"),
    ("0", 5, 3, "zero"),
])
def test_model_rejections(text, p, nvars, kind):
    with pytest.raises(ModelError) as exc:
        HypersurfaceModel.from_string(text, p, nvars)
    assert exc.value.kind == kind


def test_singular_point_is_reported():
    f = parse_poly("x^3+y^3+z^3", 3, 3)
    cert = is_smooth(f)
    assert not cert.smooth
    x = cert.point
    assert all(int(g.substitute(list(x))) % 3 == 0 for g in [f] + [f.derivative(i) for i in range(3)])


@pytest.mark.parametrize("text,p", [("x^3+y^3+z^3", 7), ("y^2*z-x^3-x*z^2", 5), ("y^2*z+x*y*z-x^3-z^3", 2)])
def test_smooth_curves(text, p):
    assert is_smooth(parse_poly(text, 3, p)).smooth


def test_normalization_keeps_a_pure_power(curve7):
    f = curve7.f
    assert f.coefficient((3, 0, 0)) % 7 != 0
    assert curve7.is_curve and curve7.N == 3 and curve7.n == 1


@pytest.mark.parametrize("tag", ["O", "B1", "B2", "B1q", "B1gen"])
def test_dd_is_zero(curve5, tag):
    assert check_dd_zero(curve5, cech_complex(curve5, Sheaf.parse(tag), 4))


def test_structure_sheaf_of_curve(curve7):
    # h^0(O) = h^1(O) = 1 for a genus-one curve
    assert stabilize(curve7, Sheaf.parse("O"))[0] == (1, 1)


def test_structure_sheaf_of_quartic(quartic5):
    assert stabilize(quartic5, Sheaf.parse("O"))[0] == (1, 0, 1)


def test_b1_matches_hasse(curve5, curve7):
    assert stabilize(curve5, Sheaf.parse("B1"))[0] == (0, 0)
    assert stabilize(curve7, Sheaf.parse("B1"))[0] == (1, 1)


def test_quotient_model_on_curve_agrees(curve7):
    assert stabilize(curve7, Sheaf.parse("B1q"))[0] == stabilize(curve7, Sheaf.parse("B1"))[0]


def test_nonstabilized_is_raised(curve5):
    with pytest.raises(NonStabilized):
        stabilize(curve5, Sheaf.parse("O"), schedule=(4,))
    with pytest.raises(ValueError):
        stabilize(curve5, Sheaf.parse("O"), schedule=(8, 4))


def test_profile_small(curve7):
    prof = cohomology_profile(curve7, 2)
    assert prof.top == [1, 1] and prof.lower == [1, 1]
    assert prof.method == "cartier-kernel"
    assert all(D in CURVE_SCHEDULE for D in prof.D_final)


def test_dump_is_stable(curve5):
    cx = cech_complex(curve5, Sheaf.parse("B1"), 4)
    a = dump_complex(curve5, cx)
    assert a == dump_complex(curve5, cx)
    assert a.splitlines()[0].startswith("complex sheaf=B1 D=4")
    assert "cohomology q=1 dim=0" in a


def test_cohomology_dims_length(quartic5):
    assert len(cohomology_dims(quartic5, Sheaf.parse("B1q"), 3)) == 3
