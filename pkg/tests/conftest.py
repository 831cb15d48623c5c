import numpy as np
import pytest

from multispec.boundary import BoundaryMatrix, random_unitary
from multispec.intervals import IntervalConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_config(n, rng, length_range=(0.2, 2.0), gap_range=(0.2, 2.0)):
    return IntervalConfig.from_lengths(
        rng.uniform(-2, 2), rng.uniform(*gap_range, n), rng.uniform(*length_range, n - 1)
    )


def random_boundary(n, rng):
    return BoundaryMatrix(random_unitary(n, rng))


def random_su2(rng, modulus_b=None):
    theta = rng.uniform(0, np.pi / 2) if modulus_b is None else np.arcsin(modulus_b)
    a = np.cos(theta) * np.exp(2j * np.pi * rng.uniform())
    b = np.sin(theta) * np.exp(2j * np.pi * rng.uniform())
    return BoundaryMatrix.su2(a, b)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
