import pytest

from heatlab.generators import (
    lattice_box,
    stretched_vicsek,
    vicsek_tree,
    weighted_vicsek,
)


@pytest.fixture(scope="session")
def path2001():
    return lattice_box(1, 2001)


@pytest.fixture(scope="session")
def path201():
    return lattice_box(1, 201)


@pytest.fixture(scope="session")
def box41():
    return lattice_box(2, 41)


@pytest.fixture(scope="session")
def vicsek2():
    return vicsek_tree(2)


@pytest.fixture(scope="session")
def vicsek3():
    return vicsek_tree(3)


@pytest.fixture(scope="session")
def vicsek4():
    return vicsek_tree(4)


@pytest.fixture(scope="session")
def wvicsek3():
    return weighted_vicsek(3)


@pytest.fixture(scope="session")
def stretched2():
    return stretched_vicsek(2)


@pytest.fixture(scope="session")
def stretched4():
    return stretched_vicsek(4)
