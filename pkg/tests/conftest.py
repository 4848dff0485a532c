import math

import numpy as np
import pytest

from espsmooth.bitseq import BitSequence


def H(q):
    """Reference binary entropy, written out independently of the package."""
    if q in (0, 1):
        return 0.0
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def bits(text):
    return BitSequence.from_string(text)


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


#: PASS/FAIL lines from the acceptance module, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
