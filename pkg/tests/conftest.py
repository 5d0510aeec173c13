import numpy as np
import pytest

from desknav.world import load_world
from worlds import ASYM_ROOM, ROOM_4X4


@pytest.fixture
def room():
    return load_world(ROOM_4X4)


@pytest.fixture
def asym_room():
    return load_world(ASYM_ROOM)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
