import math

import pytest

from brwspectra.laws import (
    BetaStableAnalytic,
    DegenerateAnalytic,
    DiscreteFinite,
    GaussianIid,
    HeavyTilt,
    OffspringLaw,
    PercolationBernoulli,
    normalize_for_mandelbrot,
)

LOG2 = math.log(2.0)
Q_C = math.sqrt(2 * LOG2)


def make_gauss():
    return GaussianIid(1, offspring_law=OffspringLaw.constant(2), mean=(0.0,), variances=(1.0,))


def make_pm1():
    return DiscreteFinite.from_atoms([(1.0, [[1.0], [-1.0]])], 1)


@pytest.fixture
def gauss():
    return make_gauss()


@pytest.fixture
def pm1():
    return make_pm1()


@pytest.fixture
def heavy():
    return HeavyTilt(1)


@pytest.fixture
def heavy_normalized():
    return normalize_for_mandelbrot(HeavyTilt(1)).law


@pytest.fixture
def percolation():
    return PercolationBernoulli(1, offspring_law=OffspringLaw.constant(2), p=0.5)


@pytest.fixture
def beta_stable():
    return BetaStableAnalytic(1, mean_offspring_value=2.0, c=1.0, beta=0.5)


@pytest.fixture
def degenerate():
    return DegenerateAnalytic(1, mean_offspring_value=2.0)


@pytest.fixture
def random_discrete():
    """Random offspring number, correlated 2-d increments."""
    return DiscreteFinite.from_atoms(
        [
            (0.3, [[1.0, 0.0], [-0.5, 1.0]]),
            (0.5, [[0.2, -1.0], [0.0, 0.5], [-1.0, -0.3]]),
            (0.2, [[2.0, 1.0]]),
        ]
    )


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    def record(number: int, name: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
