import numpy as np
import pytest

from thresholdou.model import SamplePath, ThresholdOUModel
from thresholdou.simulate import SimulationPlan, euler_simulate

SCENARIO1 = ThresholdOUModel((-0.5, 0.5), (1, 2, 3), (0.3, 0.5, 0.7), (1, 2, 3))


@pytest.fixture
def scenario1_model():
    return SCENARIO1


@pytest.fixture
def short_path():
    return SamplePath([1.0, 0.9, 0.8], 0.1)


@pytest.fixture(scope="session")
def scenario1_path():
    return euler_simulate(SimulationPlan(SCENARIO1, 0.0, 3000, 0.1, seed=11))


def simulate(model, n, h, seed=0, x0=0.0, rep=0):
    return euler_simulate(SimulationPlan(model, x0, n, h, seed, rep))


@pytest.fixture
def rng():
    return np.random.default_rng(5)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
