import numpy as np
import pytest

from mixvar.core import coefficients
from mixvar.sim import ErrorSpec, SimulationRequest, simulate

# mixed VAR(1) used throughout: eigenvalues 0.7 and 2
PHI_MIXED = [[0.7, -1.3], [0.0, 2.0]]
# eigenvalues 0.9 and 1.2
PHI_SLOW = [[0.9, -0.3], [0.0, 1.2]]
# eigenvalues -0.488 and 1.171, explosive root dominant in the states
PHI_CRYPTO = [[-0.0901, 1.1998], [0.4183, 0.7724]]


def mixed_path(T, dof=4.0, seed=0, phi=PHI_MIXED, unit_variance=False):
    c = coefficients(phi)
    errors = ErrorSpec.unit_variance(dof, c.m) if unit_variance else ErrorSpec(dof, np.eye(c.m))
    return simulate(SimulationRequest(c, errors, T), rng=np.random.default_rng(seed)).values


@pytest.fixture(scope="session")
def mixed_series():
    return mixed_path(600, seed=11)


@pytest.fixture(scope="session")
def mixed_oracle(mixed_series):
    from mixvar.gcov import model_from_coefficients

    return model_from_coefficients(coefficients(PHI_MIXED), mixed_series)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
