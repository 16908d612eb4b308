import numpy as np
import pytest

from qtsqueeze.plant import PlantParams, carrier_effective_cavity
from qtsqueeze.tp_core import FrequencyGrid

ETLF_TUNING = (-30000, 14030)


@pytest.fixture(scope="session")
def etlf():
    """ETLF plant at the reference length tuning."""
    return PlantParams().with_tuning(*ETLF_TUNING)


@pytest.fixture(scope="session")
def etlf_cavity(etlf):
    return carrier_effective_cavity(etlf)


@pytest.fixture(scope="session")
def grid():
    return FrequencyGrid.logspace_hz(1.0, 1000.0, 120)


def hz(x):
    return np.asarray(x) / (2 * np.pi)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
