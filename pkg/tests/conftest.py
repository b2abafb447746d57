import numpy as np
import pytest

from spiked_wigner import noise, transform as tr


@pytest.fixture(scope="session")
def gaussian():
    return noise.standard_gaussian()


@pytest.fixture(scope="session")
def mixture():
    return noise.gaussian_rademacher_mixture()


@pytest.fixture(scope="session")
def optimal(mixture):
    return tr.make_optimal(mixture)


@pytest.fixture(scope="session")
def quadratic(gaussian):
    return tr.normalize(tr.quadratic_example(), gaussian)


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


# acceptance lines are collected here and echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
