import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from quasilab import QuasimodeBuilder, SubprincipalSymbol, residual_sweep  # noqa: E402

LADDER = tuple(np.geomspace(0.2, 0.02, 8))
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def linear_symbol():
    return SubprincipalSymbol([0.0], [0.0, -1.0], 1.0)


@pytest.fixture(scope="session")
def constant_symbol():
    return SubprincipalSymbol([0.0], [-1.0], 1.0)


@pytest.fixture(scope="session")
def sweeps(linear_symbol):
    """Reduced-path sweeps for b = -i t at N = 0..3, built once."""
    out = {}
    for N in range(4):
        builder = QuasimodeBuilder(linear_symbol, truncation_order=N).fit()
        out[N] = residual_sweep(builder, LADDER)
    return out


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
