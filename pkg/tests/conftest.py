import os

import numpy as np
import pytest
from hypothesis import settings

from thresholdlab.perturbation import PerturbationPair, PotentialSpec
from thresholdlab.transverse import build_strip_spectrum, group_containing

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def strip():
    return build_strip_spectrum(8)


@pytest.fixture(scope="session")
def bottom_pair():
    """Potential with a real eigenvalue below the first threshold."""
    return PerturbationPair(PotentialSpec.trig_series([1.0, 0.0, 4.0], [0.5]))


@pytest.fixture(scope="session")
def embedded_pair():
    """PT-symmetric potential with complex eigenvalues near the second threshold."""
    return PerturbationPair(PotentialSpec.trig_series([1.0], [0.0, 3.0]))


@pytest.fixture(scope="session")
def well_pair():
    """x1-independent square well of depth 1 on |x2| <= 1."""
    return PerturbationPair(PotentialSpec.box_constant(-1.0, (0.0, np.pi), (-1.0, 1.0)))


@pytest.fixture(scope="session")
def sine_table():
    """Three sine modes tabulated finely enough for a spline Gram error below 1e-10."""
    x = np.linspace(0.0, np.pi, 2001)
    rows = np.array([np.sqrt(2 / np.pi) * np.sin(j * x) for j in (1, 2, 3)])
    return x, rows


def group(spectrum, p):
    return group_containing(spectrum, p)
