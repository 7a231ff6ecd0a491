import numpy as np
import pytest

from dualedge.rng import SplitMix64


@pytest.fixture
def gen():
    return SplitMix64(1234)


def rand_tensor(gen, shape, low=-1.0, high=1.0):
    return gen.uniform(low, high, shape).astype(np.float32)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
