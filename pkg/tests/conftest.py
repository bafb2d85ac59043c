import sys

import numpy as np
import pytest

from bincs import sensing


@pytest.fixture
def tiny_matrix():
    # M=8, nu=2, s=4 -> n=4
    return sensing.sample_gallager(sensing.LdpcParams.from_sizes(8, 4, 2), seed=3)


@pytest.fixture
def small_matrix():
    return sensing.sample_gallager(sensing.LdpcParams.from_sizes(256, 32, 4), seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
