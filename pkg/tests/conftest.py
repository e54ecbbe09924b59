import numpy as np
import pytest

from papsim import potentials
from papsim.units import RB85_PAIR_REDUCED_MASS


@pytest.fixture(scope="session")
def mass_rb():
    return RB85_PAIR_REDUCED_MASS


@pytest.fixture(scope="session")
def x_resonant():
    """Ground-surface model calibrated to a = 2500 a.u. (cached per session)."""
    return potentials.builtin_x_model(2500.0)


@pytest.fixture(scope="session")
def x_background():
    """Ground-surface model calibrated to a = 100 a.u."""
    return potentials.builtin_x_model(100.0)


@pytest.fixture(scope="session")
def excited_model():
    return potentials.builtin_excited_model()


class AnalyticPotential:
    """Adapter for closed-form wells used as solver oracles."""

    def __init__(self, fn, r_min=1e-6, asymptote=float("inf"), label=""):
        self._fn = fn
        self.r_min = r_min
        self.asymptote = asymptote
        self.label = label

    def value(self, r):
        return self._fn(np.asarray(r, dtype=float))


@pytest.fixture
def make_analytic():
    return AnalyticPotential
