import pytest

from cyheight.cech import HypersurfaceModel

REFERENCE = "y^2*z-x^3-x*z^2"


@pytest.fixture(scope="session")
def curve5():
    return HypersurfaceModel.from_string(REFERENCE, 5, 3)


@pytest.fixture(scope="session")
def curve7():
    return HypersurfaceModel.from_string(REFERENCE, 7, 3)


@pytest.fixture(scope="session")
def quartic5():
    return HypersurfaceModel.from_string("x^4+y^4+z^4+w^4", 5, 4)
