import sys

import numpy as np
import pytest

from phikit.field import GridSpec
from phikit.lattice import TruncatedLattice
from phikit.lp import build_lp_pair, build_mollifier


@pytest.fixture(scope="session")
def small():
    """L = 16, N = 64, scales 0..2 (dense matrices are cheap here)."""
    g = GridSpec(2, 16.0, 64)
    return g, build_lp_pair(g), TruncatedLattice(g, 0, 2), build_mollifier(g)


@pytest.fixture(scope="session")
def tiny():
    g = GridSpec(2, 16.0, 32)
    return g, build_lp_pair(g), TruncatedLattice(g, 0, 1), build_mollifier(g)


@pytest.fixture(scope="session")
def default():
    g = GridSpec(2, 64.0, 256)
    return g, build_lp_pair(g), TruncatedLattice.default(g), build_mollifier(g)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not getattr(mod, "SUMMARY", None):
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.SUMMARY):
        for line in mod.SUMMARY[k]:
            terminalreporter.write_line(line)
