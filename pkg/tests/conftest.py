from __future__ import annotations

from fractions import Fraction
from importlib import resources
from itertools import product

import numpy as np
import pytest


def exact_statistics(values) -> tuple[Fraction, Fraction]:
    """(I_n, K_n) by literal tuple enumeration in exact rational arithmetic.

    Independent of the package: works on Fractions, evaluates the V-d.f.'s
    at every candidate point, and uses ``sorted(...)[1]`` for the median.
    """
    x = [Fraction(v) for v in values]
    n = len(x)
    maxes = [max(t) for t in product(x, repeat=3)]
    quads = [a + sorted(t)[1] for a in x for t in product(x, repeat=3)]

    def d(t):
        h = Fraction(sum(m < t for m in maxes), n**3)
        g = Fraction(sum(q < t for q in quads), n**4)
        return h - g

    i_val = sum(d(v) for v in x) / n
    points = sorted(set(maxes) | set(quads))
    points.append(points[-1] + 1)
    k_val = max(abs(d(t)) for t in points)
    return i_val, k_val


@pytest.fixture(scope="session")
def aircraft() -> np.ndarray:
    text = resources.files("expotest").joinpath("data", "aircraft.txt").read_text()
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return np.array(" ".join(rows).split(), dtype=float)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
