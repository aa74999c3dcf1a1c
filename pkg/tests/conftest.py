import numpy as np
import pytest

from farfield_lab.medium import builtin_media, bump_medium, constant_medium, disc_medium, square_grid

K = 2.0


@pytest.fixture(scope="session")
def k():
    return K


@pytest.fixture(scope="session")
def media96():
    return builtin_media(96)


@pytest.fixture(scope="session")
def disc96(media96):
    return media96["disc"]


@pytest.fixture(scope="session")
def small_grid():
    return square_grid(1.5, 24)


@pytest.fixture(scope="session")
def small_disc(small_grid):
    return disc_medium((0.0, 0.0), 1.0, 1.5, small_grid)


@pytest.fixture(scope="session")
def small_bump(small_grid):
    return bump_medium((0.1, -0.2), 1.0, 0.8 + 0.1j, small_grid)


@pytest.fixture(scope="session")
def small_free(small_grid):
    return constant_medium(small_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
