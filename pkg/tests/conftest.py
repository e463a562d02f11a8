import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from shared.fields import Grid1D
from shared.scenarios import ScenarioSpec
from shared.solver import SolverConfig, run
from shared.thermo import GasModel


@pytest.fixture
def gas3():
    return GasModel(K=1.0, gamma=3.0)


def simulate(name, grid, t_end, stride=5, **overrides):
    spec = ScenarioSpec.from_catalog(name, **overrides)
    return run(spec, grid, spec.model(), SolverConfig(t_end=t_end, stride=stride))


@pytest.fixture(scope="session")
def uniform_history():
    return simulate("double_rarefaction", Grid1D(-10.0, 10.0, 64), t_end=2.0, amplitude=0.0)


@pytest.fixture(scope="session")
def rarefaction_history():
    return simulate("double_rarefaction", Grid1D(-20.0, 20.0, 400), t_end=2.0, amplitude=0.5)


@pytest.fixture(scope="session")
def compressive_history():
    return simulate("compressive_pulse", Grid1D(-15.0, 15.0, 300), t_end=10.0)


@pytest.fixture(scope="session")
def entropy_history():
    return simulate("entropy_bump", Grid1D(-16.0, 16.0, 256), t_end=2.0)
