"""Shared fixtures.  The long flow runs are computed once per session."""
import numpy as np
import pytest

from kahlerflow.evolve import SolverConfig
from kahlerflow import experiments as ex


@pytest.fixture(scope="session")
def theorem1_k1():
    return ex.theorem1_experiment(b=1.0, mode="hyperbolic", k=1, T=1e3, t_end=1e5, config=SolverConfig())


@pytest.fixture(scope="session")
def theorem1_k0():
    return ex.theorem1_experiment(b=1.0, mode="hyperbolic", k=0, T=1e3, t_end=1e5, config=SolverConfig())


@pytest.fixture(scope="session")
def theorem2_k4():
    return ex.theorem2_experiment(b=1.0, k=4, T=1e3, t_end=1e5, config=SolverConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    RESULTS = getattr(mod, "RESULTS", [])
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
