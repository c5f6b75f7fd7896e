import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import max_coeff_diff, random_operator
from tfalg.core import (
    TFOperator,
    TFPoint,
    Weight,
    adjoint,
    axpy,
    coeff_norms,
    compose,
    compose_tracked,
    norm_av,
    power,
    power_norm_bound,
    scale,
    support_radius,
    truncate,
    unit,
)
from tfalg.exceptions import DimensionMismatchError, EmptyOperatorError, ResourceLimitError
from tfalg.oracle import Grid

PI = math.pi
U0 = TFOperator.identity(1)


# -- constructors and points -------------------------------------------------------

def test_point_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        TFPoint((0.0, 1.0), (0.0,))


def test_point_rejects_nan():
    with pytest.raises(ValueError):
        TFPoint((float("nan"),), (0.0,))


def test_from_terms_sums_duplicates_and_drops_zero():
    op = TFOperator.from_terms(1, [((1,), (0,), 1.0), ((1,), (0,), -1.0), ((2,), (0,), 0.5)])
    assert len(op) == 1
    assert op.coefficient([2, 0]) == 0.5


def test_quantization_merges_roundoff_neighbours():
    a = TFOperator.from_terms(1, [((0.1 + 0.2,), (0,), 1.0), ((0.3,), (0,), 1.0)])
    assert len(a) == 1 and a.coefficient([0.3, 0]) == 2.0


def test_mixed_dimensions_raise():
    with pytest.raises(DimensionMismatchError):
        compose(U0, TFOperator.identity(2))


# -- compose / adjoint / axpy examples -----------------------------------------------

def test_identity_is_unit_for_compose(rng):
    t = random_operator(rng, 5)
    assert max_coeff_diff(compose(U0, t), t) == 0
    assert max_coeff_diff(compose(t, U0), t) == 0


def test_translation_then_modulation_phase():
    ab = compose(unit([1, 0]), unit([0, PI]))
    assert len(ab) == 1
    assert abs(ab.coefficient([1, PI]) - (-1)) < 1e-15


def test_noncommutativity():
    ba = compose(unit([0, PI]), unit([1, 0]))
    assert abs(ba.coefficient([1, PI]) - 1) < 1e-15


def test_adjoint_examples():
    assert max_coeff_diff(adjoint(U0), U0) == 0
    a = adjoint(unit([1, PI]))
    assert abs(a.coefficient([-1, -PI]) + 1) < 1e-15


def test_axpy_examples(rng):
    t = random_operator(rng, 4)
    assert len(axpy(1, t, scale(-1, t))) == 0
    assert axpy(2, U0, U0).coefficient([0, 0]) == 3
    s = axpy(1j, unit([1, 0]), U0)
    assert s.as_dict() == TFOperator.from_terms(1, [((0,), (0,), 1), ((1,), (0,), 1j)]).as_dict()


def test_operator_sugar(rng):
    a, b = random_operator(rng, 3), random_operator(rng, 3)
    assert max_coeff_diff(a @ b, compose(a, b)) == 0
    assert max_coeff_diff(a - a, TFOperator.zero()) == 0
    assert max_coeff_diff(2 * a, a + a) < 1e-15


# -- norms -------------------------------------------------------------------------

def test_norm_examples():
    t = TFOperator.from_terms(1, [((0,), (0,), 2.0), ((1,), (0,), 1j)])
    assert norm_av(t, Weight.constant()) == 3
    assert norm_av(t, Weight.polynomial(1)) == pytest.approx(4)


def test_coeff_norm_examples():
    assert coeff_norms(U0) == (1, 1, 1)
    t = TFOperator.from_terms(1, [((0,), (0,), 0.6), ((1,), (0,), 0.8)])
    assert coeff_norms(t) == pytest.approx((0.8, 1.0, 1.4))


def test_support_radius():
    assert support_radius(U0) == 0
    assert support_radius(unit([3, 4])) == 5
    with pytest.raises(EmptyOperatorError):
        support_radius(TFOperator.zero())


def test_truncate_examples(rng):
    t = random_operator(rng, 4)
    same, lost = truncate(t, None, 0)
    assert same is t and lost == 0
    small = TFOperator.from_terms(1, [((0,), (0,), 1), ((1,), (0,), 1e-9)])
    cut, lost = truncate(small, Weight.constant(), 1e-8)
    assert max_coeff_diff(cut, U0) == 0 and lost == pytest.approx(1e-9)


def test_weight_parse_and_values():
    assert Weight.parse("poly:2,3") == Weight.polynomial(2, 3)
    assert Weight.parse("exp:1").radial(2.0) == pytest.approx(math.e ** 2)
    assert Weight.parse("subexp:1,0.5").admissible
    assert not Weight.parse("exp:1").admissible
    for bad in ("poly:-1", "banana", "subexp:1,1.5", "exp:0"):
        with pytest.raises(ValueError):
            Weight.parse(bad)


def test_power_norm_bound_examples():
    assert power_norm_bound(U0, Weight.polynomial(2), 3) == pytest.approx(2.0)
    a = scale(0.5, unit([1, 0]))
    bound = power_norm_bound(a, Weight.constant(), 4)
    assert bound == pytest.approx(math.sqrt(5) * 0.0625, rel=1e-9)
    assert norm_av(power(a, 4)[0]) == pytest.approx(0.0625)


def test_power_norm_bound_dominates_powers(rng):
    grid = Grid(1, 64, 8.0)
    v = Weight.polynomial(1)
    for _ in range(3):
        a = TFOperator.from_terms(1, [(rng.integers(-4, 5, 1) * grid.h, rng.integers(-4, 5, 1) * PI / 8,
                                       0.5 * rng.standard_normal()) for _ in range(3)])
        for n in range(1, 6):
            assert power_norm_bound(a, v, n, grid) >= norm_av(power(a, n)[0], Weight.constant()) * (1 - 1e-9)


def test_term_cap_enforced(rng, monkeypatch):
    monkeypatch.setenv("TFALG_TERM_CAP", "10")
    a, b = random_operator(rng, 5), random_operator(rng, 5)
    with pytest.raises(ResourceLimitError):
        compose(a, b)


# -- algebraic properties (hypothesis) ------------------------------------------------

coord = st.integers(-40, 40).map(lambda k: k * 0.125)
coef = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)
term = st.tuples(coord, coord, coef)


def op_strategy(max_terms=4):
    return st.lists(term, min_size=1, max_size=max_terms).map(
        lambda ts: TFOperator.from_terms(1, [((t,), (w,), c) for t, w, c in ts]))


def _rel(a, b):
    scale_ = max(norm_av(a), norm_av(b), 1e-300)
    return max_coeff_diff(a, b) / scale_


@settings(max_examples=60, deadline=None)
@given(op_strategy(3), op_strategy(3), op_strategy(3))
def test_associativity(a, b, c):
    assert _rel(compose(compose(a, b), c), compose(a, compose(b, c))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(op_strategy(), op_strategy())
def test_submultiplicativity(a, b):
    for v in (Weight.constant(), Weight.polynomial(1.5), Weight.subexponential(0.5, 0.5)):
        prod, lost = compose_tracked(a, b, v)
        assert norm_av(prod, v) <= norm_av(a, v) * norm_av(b, v) * (1 + 1e-12) + lost


@settings(max_examples=60, deadline=None)
@given(op_strategy(), op_strategy())
def test_involution(a, b):
    assert _rel(adjoint(adjoint(a)), a) <= 1e-14
    v = Weight.polynomial(2)
    assert norm_av(adjoint(a), v) == pytest.approx(norm_av(a, v), rel=1e-12)
    assert _rel(adjoint(compose(a, b)), compose(adjoint(b), adjoint(a))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(coord, coord, st.floats(0, 2 * math.pi))
def test_unimodular_terms_are_unitary(t, w, theta):
    a = TFOperator.shift([t], [w], complex(math.cos(theta), math.sin(theta)))
    prod = compose(adjoint(a), a)
    assert len(prod) == 1
    assert abs(prod.coefficient([0, 0]) - 1) <= 1e-14


def test_reduce_is_order_independent(rng):
    terms = [((rng.uniform(-1, 1),), (rng.uniform(-1, 1),), rng.standard_normal()) for _ in range(8)]
    terms += [((0.25,), (0.5,), 1e-3 * k) for k in range(30)]
    a = TFOperator.from_terms(1, terms)
    b = TFOperator.from_terms(1, terms[::-1])
    assert a.as_dict() == b.as_dict()
