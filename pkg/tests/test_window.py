import math

import numpy as np
import pytest

from tfalg.core import TFPoint
from tfalg.exceptions import GridError
from tfalg.oracle import Grid, apply_shift
from tfalg.window import (
    fourier_zero_residuals,
    plan_window,
    realize_window,
    required_half_length,
    verify_orthonormal,
)

PI = math.pi
ORIGIN = TFPoint.origin(1)
PAIR = [ORIGIN, TFPoint((0.0,), (PI,))]


def check_invariants(plan):
    times = np.linalg.norm(np.array(plan.time_proj), axis=1)
    assert np.all((times == 0) | (times > plan.tau_min))
    assert np.all(times <= plan.tau_max * (1 + 1e-12))
    acc = 0.0
    for k, (t, w, n) in enumerate(zip(plan.shifts, plan.omegas, plan.parities)):
        inner = float(np.dot(t, w))
        assert abs(inner - (2 * n + 1) * PI) <= 1e-12 * max(1.0, abs(inner))
        norm = float(np.linalg.norm(t))
        assert norm > (plan.tau_max if k == 0 else acc + 2 * plan.m * plan.tau_max)
        acc += norm


def test_single_point_plan():
    plan = plan_window([ORIGIN])
    assert plan.m == 0 and plan.shifts == []


def test_pair_plan_has_odd_integer_shift():
    plan = plan_window(PAIR)
    assert plan.m == 1
    t1 = plan.shifts[0][0]
    assert t1 == pytest.approx(round(t1)) and round(t1) % 2 == 1 and t1 > plan.tau_max
    assert sorted(w[0] for w in plan.freq_proj) == pytest.approx([-PI, 0, PI])


@pytest.mark.parametrize("d", [1, 2])
def test_invariant_audit(d):
    rng = np.random.default_rng(d)
    for _ in range(10):
        sigma = [TFPoint.from_vector(rng.uniform(-2, 2, 2 * d)) for _ in range(4)]
        check_invariants(plan_window(sigma))


def test_aligned_plan_invariants():
    rng = np.random.default_rng(9)
    h = 1 / 64
    for _ in range(5):
        sigma = [TFPoint((rng.integers(-8, 9) / 4,), (PI * rng.integers(-6, 7) / 4,)) for _ in range(4)]
        if len({p.key for p in sigma}) < 4:
            continue
        plan = plan_window(sigma, time_step=h)
        check_invariants(plan)
        for t in plan.shifts:
            assert t[0] / h == pytest.approx(round(t[0] / h), abs=1e-9)


def test_duplicate_points_rejected():
    with pytest.raises(ValueError):
        plan_window([ORIGIN, ORIGIN])
    with pytest.raises(ValueError):
        plan_window([])


def test_single_bump_window():
    grid = Grid(1, 1024, 8.0)
    g = realize_window(plan_window([ORIGIN], time_step=grid.h), grid)
    assert g.norm() == pytest.approx(1, abs=1e-12)
    support = np.abs(grid.axis[np.abs(g.values) > 0])
    assert support.max() <= 1.0 + 1e-12
    assert np.ptp(np.abs(g.values[np.abs(g.values) > 0])) <= 1e-12
    assert verify_orthonormal(g, [ORIGIN]).max_deviation <= 1e-12


def test_pair_window_two_equal_bumps():
    grid = Grid(1, 1024, 8.0)
    plan = plan_window(PAIR, time_step=grid.h)
    g = realize_window(plan, grid)
    vals = g.values.real
    assert np.all(vals >= 0) and np.all(g.values.imag == 0)
    mid = grid.axis[vals > 0].mean()
    left, right = vals[grid.axis < mid], vals[grid.axis >= mid]
    assert np.sum(left ** 2) == pytest.approx(np.sum(right ** 2), rel=1e-12)
    rep = verify_orthonormal(g, PAIR, tol=1e-6)
    assert rep.passed and rep.max_deviation <= 1e-6
    assert max(fourier_zero_residuals(plan, grid)) <= 1e-10


def test_time_pair_disjoint():
    grid = Grid(1, 1024, 16.0)
    sigma = [ORIGIN, TFPoint((5.0,), (0.0,))]
    plan = plan_window(sigma, time_step=grid.h)
    g = realize_window(plan, grid)
    shifted = apply_shift(g, [5.0, 0.0])
    assert np.count_nonzero((np.abs(g.values) > 0) & (np.abs(shifted.values) > 0)) == 0
    assert verify_orthonormal(g, sigma).max_deviation <= 1e-12


def test_four_point_window_and_disjointness():
    grid = Grid(1, 8192, 64.0, cap=8192)
    sigma = [ORIGIN, TFPoint((0.5,), (PI / 2,)), TFPoint((0.25,), (PI,)), TFPoint((0.0,), (PI / 4,))]
    plan = plan_window(sigma, time_step=grid.h)
    g = realize_window(plan, grid)
    assert verify_orthonormal(g, sigma, 1e-5).passed
    assert max(fourier_zero_residuals(plan, grid)) <= 1e-10
    supp = np.abs(g.values) > 0
    for t in plan.time_proj:
        if np.any(t != 0):
            moved = np.abs(apply_shift(g, [t[0], 0.0]).values) > 0
            assert np.count_nonzero(supp & moved) == 0


@pytest.mark.parametrize("n", [1024, 2048])
def test_gram_resolution(n):
    # aligned shifts make the quadrature exact; refining keeps it at round-off
    grid = Grid(1, n, 8.0, cap=n)
    sigma = [ORIGIN, TFPoint((0.5,), (PI / 2,)), TFPoint((0.25,), (PI,))]
    g = realize_window(plan_window(sigma, time_step=grid.h), grid)
    assert verify_orthonormal(g, sigma).max_deviation <= 1e-12


def test_grid_too_small_reports_length():
    grid = Grid(1, 1024, 2.0)
    plan = plan_window(PAIR, time_step=grid.h)
    with pytest.raises(GridError, match=f"L > {required_half_length(plan):.6g}"):
        realize_window(plan, grid)


def test_misaligned_plan_rejected():
    grid = Grid(1, 1024, 8.0)
    plan = plan_window([ORIGIN, TFPoint((0.0,), (2.7,))])
    with pytest.raises(GridError):
        realize_window(plan, grid)


def test_plan_serializes():
    d = plan_window(PAIR).to_dict()
    assert set(d) >= {"sigma", "delta_set", "time_proj", "freq_proj", "tau_min", "tau_max", "shifts", "parities"}
