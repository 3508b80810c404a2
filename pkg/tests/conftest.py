import sys

import numpy as np
import pytest

from nmsse import MemoryKernel, SystemModel, driven_tla


def pytest_terminal_summary(terminalreporter):
    """One measured pass/fail line per acceptance criterion, when those ran."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "CRITERION_LINES", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

# reference parameter set used throughout: resonance-shifted driven atom
GAMMA, KAPPA, DELTA, CHI = 1.0, 1.0, 3.0, 5.0


@pytest.fixture(scope="session")
def fig_kernel() -> MemoryKernel:
    return MemoryKernel.tla(GAMMA, KAPPA)


@pytest.fixture(scope="session")
def fig_model() -> SystemModel:
    return driven_tla(DELTA, CHI)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(7)
