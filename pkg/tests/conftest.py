import pytest

from cal.spaces import build_hypercube, build_product


@pytest.fixture
def cube3():
    return build_hypercube(3)


@pytest.fixture
def cube4():
    return build_hypercube(4)


@pytest.fixture
def line4():
    """Four points on a line: the 1-coordinate alphabet-4 product."""
    return build_product([4])
