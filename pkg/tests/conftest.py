from fractions import Fraction

import numpy as np
import pytest

from qensemble.spectrum import Spectrum

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda ln: ln.split("criterion", 1)[1]):
        terminalreporter.write_line(line)


@pytest.fixture
def two_level():
    return Spectrum([0, 1], labels=["low", "high"])


@pytest.fixture
def three_level():
    return Spectrum([0, 1, 2])


@pytest.fixture
def five_level():
    return Spectrum(["0", "0.3", "1.1", "2", "3.7"], [1, 2, 1, 3, 1])


def random_spectrum(rng, k=5, exact=False):
    """Random k-level spectrum with distinct energies and small degeneracies."""
    if exact:
        values = rng.choice(np.arange(0, 40), size=k, replace=False)
        energies = [Fraction(int(v), 8) for v in values]
    else:
        energies = np.sort(rng.uniform(-3.0, 5.0, size=k)).tolist()
    degs = rng.integers(1, 4, size=k).tolist()
    return Spectrum(energies, degs)
