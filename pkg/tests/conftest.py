import pytest

from dualscreen.scenario import build_scenario


@pytest.fixture(scope="session")
def s1():
    return build_scenario("s1")


@pytest.fixture(scope="session")
def s2():
    return build_scenario("s2")


@pytest.fixture(scope="session")
def s3():
    return build_scenario("s3")


@pytest.fixture(scope="session")
def s1_small():
    # coarse grids keep the pairwise and enumeration tests fast
    return build_scenario("s1", type_count=9, loss_cells=25)
