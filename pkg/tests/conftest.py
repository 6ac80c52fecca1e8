import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from coinccl.optics import load_silicon, vacuum_table  # noqa: E402
from coinccl.slab import SlabConfig, make_kinematics  # noqa: E402


@pytest.fixture(scope="session")
def silicon():
    return load_silicon()


@pytest.fixture(scope="session")
def si_slab(silicon):
    return SlabConfig(thickness_d=100.0, dielectric=silicon, kinematics=make_kinematics(200e3))


@pytest.fixture(scope="session")
def vacuum_slab():
    return SlabConfig(thickness_d=100.0, dielectric=vacuum_table(), kinematics=make_kinematics(200e3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(LINES):
            terminalreporter.write_line(line)
