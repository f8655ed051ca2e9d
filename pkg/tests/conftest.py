import functools

import numpy as np
import pytest

from spinbound.models import ModelSpec
from spinbound.oracle import diagonalize


@functools.lru_cache(maxsize=None)
def ground_state(family: str, L: int, J2: float = 0.0):
    return diagonalize(ModelSpec(family, L, J2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
