import numpy as np
import pytest

from sieve_lab import BetaThetaOne, HeavyMeander, Uniform, parse_law

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def uniform():
    return Uniform()


@pytest.fixture(scope="session")
def theta2():
    return BetaThetaOne(2.0)


@pytest.fixture(scope="session")
def heavy():
    return HeavyMeander(1.0)


@pytest.fixture(scope="session")
def mixture():
    return parse_law("mixture:0.3*beta:1,1+0.7*beta:2,1")


@pytest.fixture(scope="session")
def skewed():
    return parse_law("beta:0.5,0.5")


@pytest.fixture(scope="session")
def all_laws(uniform, theta2, heavy, mixture, skewed):
    return [uniform, theta2, heavy, mixture, skewed, parse_law("beta:1.5,2.5")]


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

