import pytest

from csflow import FlowOptions, ProblemParams, make_grid


@pytest.fixture(scope="session")
def grid_small():
    """Cheap grid for algebra and operator tests."""
    return make_grid(30.0, 769)


@pytest.fixture(scope="session")
def grid_mid():
    """Accurate enough for quadrature and oracle checks."""
    return make_grid(40.0, 2049)


@pytest.fixture(scope="session")
def params_default():
    return ProblemParams()


@pytest.fixture(scope="session")
def params_full():
    """Every coefficient switched on, for gradient and operator tests."""
    return ProblemParams(
        omega=1.0, lam=1.0, p=5.0, gamma=0.5, beta=0.5, alpha=0.25, q=7.0
    )


@pytest.fixture(scope="session")
def opts_default():
    return FlowOptions()
