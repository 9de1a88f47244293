import numpy as np
import pytest

from ssm_beam.model import BeamParameters, ForcingSpec


@pytest.fixture
def beam():
    """Slow-mode example parameters with unit cubic coefficient."""
    return BeamParameters(alpha=1.0, beta=0.6, gamma=1.0, delta=0.5, mu=1.0, kappa=1.0)


@pytest.fixture
def linear_beam(beam):
    return beam.replace(kappa=0.0)


@pytest.fixture
def forced_beam(beam):
    return beam.replace(epsilon=1e-3, omega=1.3)


@pytest.fixture
def forcing():
    return ForcingSpec.first_mode(1.3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS.values():
            terminalreporter.write_line(line)
