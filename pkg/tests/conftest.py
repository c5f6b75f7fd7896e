import math

import numpy as np
import pytest

from tfalg.core import TFOperator
from tfalg.oracle import Grid


def random_aligned_operator(rng, grid: Grid, n_terms: int, t_steps: int = 16, w_steps: int = 16,
                            scale: float = 1.0) -> TFOperator:
    """Terms at t = k h, omega = j pi / L so the periodic oracle is exact."""
    d = grid.d
    terms = []
    for _ in range(n_terms):
        t = rng.integers(-t_steps, t_steps + 1, d) * grid.h
        w = rng.integers(-w_steps, w_steps + 1, d) * grid.fundamental_frequency
        c = scale * (rng.standard_normal() + 1j * rng.standard_normal())
        terms.append((t, w, c))
    return TFOperator.from_terms(d, terms)


def random_operator(rng, n_terms: int, d: int = 1, box: float = 3.0) -> TFOperator:
    terms = [(rng.uniform(-box, box, d), rng.uniform(-box, box, d),
              rng.standard_normal() + 1j * rng.standard_normal()) for _ in range(n_terms)]
    return TFOperator.from_terms(d, terms)


def geometric(q: float = 0.5, omega: float = 0.0) -> TFOperator:
    """U_0 - q U_{(1, omega)}."""
    return TFOperator.from_terms(1, [((0.0,), (0.0,), 1.0), ((1.0,), (omega,), -q)])


def max_coeff_diff(a: TFOperator, b: TFOperator) -> float:
    da, db = a.as_dict(), b.as_dict()
    keys = set(da) | set(db)
    return max((abs(da.get(k, 0) - db.get(k, 0)) for k in keys), default=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid128():
    return Grid(1, 128, 8.0)


@pytest.fixture(scope="session")
def grid64():
    return Grid(1, 64, 8.0)


PI = math.pi


# -- acceptance summary lines --------------------------------------------------------

_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_line(request):
    """Call with (number, ok, detail); the line is printed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
