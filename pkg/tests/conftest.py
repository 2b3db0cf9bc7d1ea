import numpy as np
import pytest

from zoprox.bench import get_entry
from zoprox.core import GibbsProxParams


@pytest.fixture
def unit_params():
    return GibbsProxParams(lam=1.0, delta=1.0)


@pytest.fixture
def abs_objective():
    return get_entry("abs").objective


@pytest.fixture
def wiggly():
    return get_entry("wiggly1d")


@pytest.fixture
def quad1d():
    return get_entry("quadratic", C=1.0, mu=0.0, dim=1)


def fd_gradient(objective, x, h=1e-5):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    g = np.zeros(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        g[i] = (objective.value(x + e) - objective.value(x - e)) / (2 * h)
    return g
