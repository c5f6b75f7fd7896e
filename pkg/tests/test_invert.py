import math

import numpy as np
import pytest

from conftest import geometric, max_coeff_diff, random_aligned_operator
from tfalg.channel import off_identity_ratio, random_channel
from tfalg.core import TFOperator, Weight, axpy, compose, norm_av, scale, unit
from tfalg.exceptions import ConvergenceError, DimensionMismatchError, NotContractiveError
from tfalg.invert import (
    certify_decay,
    damped_slice,
    inverse_norm_bound,
    neumann_invert_contraction,
    neumann_invert_symmetric,
    residual_radius,
    slice_support_probe,
    spectral_radius_gelfand,
    tail_sums,
)
from tfalg.oracle import Grid, assemble_matrix, frame_bounds_estimate, spectral_radius_estimate

PI = math.pi
U0 = TFOperator.identity(1)


def two_sided_residual(t, inv, v=None):
    return max(norm_av(axpy(-1, U0, compose(t, inv)), v), norm_av(axpy(-1, U0, compose(inv, t)), v))


# -- contraction mode -------------------------------------------------------------

def test_identity_inverts_in_zero_steps():
    rep = neumann_invert_contraction(U0)
    assert rep.iterations == 0 and max_coeff_diff(rep.inverse, U0) == 0


def test_geometric_series_coefficients():
    rep = neumann_invert_contraction(geometric(0.5), tol=1e-6)
    assert rep.inverse.coefficient([3, 0]) == pytest.approx(0.125, abs=1e-12)
    for n in range(10):
        assert rep.inverse.coefficient([n, 0]) == pytest.approx(2.0 ** -n, abs=1e-12)
    assert rep.residual_av <= 1e-6


def test_modulated_geometric_matches_oracle():
    t = geometric(0.5, PI)
    rep = neumann_invert_contraction(t, tol=1e-9)
    for n in range(8):
        assert abs(rep.inverse.coefficient([n, n * PI])) == pytest.approx(2.0 ** -n, abs=1e-9)
    grid = Grid(1, 64, 8.0)
    m_inv = assemble_matrix(rep.inverse, grid)
    m_ref = np.linalg.inv(assemble_matrix(t, grid))
    assert np.linalg.norm(m_inv - m_ref, 2) <= 1e-8


def test_residual_is_honest_two_sided(rng):
    for seed in range(3):
        t = random_channel(4, seed)
        rep = neumann_invert_contraction(t, tol=1e-6)
        assert two_sided_residual(t, rep.inverse) <= rep.residual_av * (1 + 1e-9)


def test_weighted_residual(rng):
    t = random_channel(3, 1, margin=0.5, t_max=1.0, omega_max=1.0)
    v = Weight.polynomial(1)
    rep = neumann_invert_contraction(t, v, tol=1e-7)
    assert two_sided_residual(t, rep.inverse, v) <= rep.residual_av * (1 + 1e-9) <= 1e-7


def test_not_contractive():
    with pytest.raises(NotContractiveError):
        neumann_invert_contraction(geometric(1.0))
    with pytest.raises(NotContractiveError):
        neumann_invert_contraction(unit([1, 0]))


def test_convergence_error_carries_partial_report():
    with pytest.raises(ConvergenceError) as info:
        neumann_invert_contraction(geometric(0.9), tol=1e-12, max_iter=5)
    assert info.value.report.iterations == 5


def test_truncation_budget_is_accounted():
    rep = neumann_invert_contraction(random_channel(5, 3), tol=1e-6, truncation_budget=1e-9)
    assert rep.truncation_mass >= 0
    assert rep.residual_av <= 1e-6


# -- symmetric mode ---------------------------------------------------------------

def test_symmetric_scalar():
    rep = neumann_invert_symmetric(scale(2, U0), None, 4, 4)
    assert rep.iterations == 0 and rep.inverse.coefficient([0, 0]) == pytest.approx(0.5)


def test_symmetric_unitary_is_adjoint():
    t = unit([1, 2])
    rep = neumann_invert_symmetric(t, None, 1, 1)
    assert len(rep.inverse) == 1
    assert rep.inverse.coefficient([-1, -2]) == pytest.approx(np.exp(-2j), abs=1e-15)


def test_symmetric_agrees_with_contraction():
    t = geometric(0.5)
    a, b = frame_bounds_estimate(t, Grid(1, 64, 8.0))
    sym = neumann_invert_symmetric(t, None, a, b, tol=1e-8)
    con = neumann_invert_contraction(t, tol=1e-8)
    assert norm_av(axpy(-1, sym.inverse, con.inverse)) <= 2e-6
    assert sym.tail_bound >= 0


def test_symmetric_handles_no_identity_coefficient():
    # no U_0 term, so only the symmetric series applies
    t = TFOperator.from_terms(1, [((1,), (0,), 1.0), ((2,), (0,), -0.3)])
    with pytest.raises(NotContractiveError):
        neumann_invert_contraction(t)
    a, b = frame_bounds_estimate(t, Grid(1, 64, 8.0))
    rep = neumann_invert_symmetric(t, None, a, b, tol=1e-7)
    assert two_sided_residual(t, rep.inverse) <= rep.residual_av <= 1e-7


def test_symmetric_bad_bounds():
    with pytest.raises(NotContractiveError):
        neumann_invert_symmetric(U0, None, 0.0, 1.0)
    with pytest.raises(NotContractiveError):
        neumann_invert_symmetric(U0, None, 2.0, 1.0)


# -- inverse-norm bound ---------------------------------------------------------------

def test_bound_examples():
    assert inverse_norm_bound(U0, 1, 0, 1, 1) == pytest.approx(1)
    assert inverse_norm_bound(scale(2, U0), 1, 0, 4, 4) == pytest.approx(0.5)
    t = geometric(0.5)
    a, b = frame_bounds_estimate(t, Grid(1, 64, 8.0))
    inv = neumann_invert_contraction(t, tol=1e-10).inverse
    assert norm_av(inv) == pytest.approx(2, abs=1e-9)
    for m in (0, 1, 2):
        assert inverse_norm_bound(t, 1, m, a, b) >= norm_av(inv, Weight.polynomial(m))


# -- spectral radius ------------------------------------------------------------------

def test_gelfand_unitary_closed_form():
    t = scale(0.5, unit([1, 3]))
    v = Weight.polynomial(2)
    est = spectral_radius_gelfand(t, v, 30)
    r = math.hypot(1, 3)
    for n, e in enumerate(est.estimates, start=1):
        assert e >= 0.5 * v.radial(n * r) ** (1 / n) * (1 - 1e-12)
    assert est.extrapolated == pytest.approx(0.5, abs=1e-6)


def test_gelfand_identity():
    est = spectral_radius_gelfand(U0, Weight.subexponential(1, 0.5), 5)
    assert all(e == pytest.approx(1) for e in est.estimates)


def test_gelfand_exponential_weight_fails_grs():
    est = spectral_radius_gelfand(scale(0.5, unit([1, 0])), Weight.exponential(1), 10)
    assert all(e == pytest.approx(0.5 * math.e, rel=1e-9) for e in est.estimates)
    assert est.extrapolated == pytest.approx(0.5 * math.e, rel=1e-9)


def test_gelfand_bounds_oracle_radius():
    t = geometric(0.5)
    est = spectral_radius_gelfand(t, Weight.polynomial(1), 20)
    r_oracle = spectral_radius_estimate(t, Grid(1, 64, 8.0))
    assert min(est.estimates) >= est.extrapolated >= r_oracle * (1 - 1e-9)


# -- decay certificate ------------------------------------------------------------------

def test_certificate_identity():
    cert = certify_decay(U0, 1, 1, 1.0, [0.5, 1, 2])
    assert cert.certified and cert.c_const == 0 and all(s == 0 for _, s in cert.tail_samples)


def test_geometric_tails_and_rate():
    inv = neumann_invert_contraction(geometric(0.5), tol=1e-12).inverse
    radii = [1, 2, 3, 4, 5, 6]
    for r, s in zip(radii, tail_sums(inv, radii)):
        assert s == pytest.approx(2.0 ** (1 - r), abs=1e-10)
    cert = certify_decay(inv, 0.25, 2.25, 1.0, radii)
    assert not cert.certified  # B >= 3A: no admissible rate
    assert cert.empirical_rate == pytest.approx(math.log(2), rel=1e-3)


def test_certified_rate_on_mild_fixture():
    t = geometric(0.2)
    a, b = frame_bounds_estimate(t, Grid(1, 64, 8.0))
    inv = neumann_invert_contraction(t, tol=1e-12).inverse
    r0 = residual_radius(t, a, b)
    cert = certify_decay(inv, a, b, r0, [1, 2, 3, 4, 5])
    assert cert.certified and cert.delta > 0
    for r, s in cert.tail_samples:
        assert s <= cert.c_const * math.exp(-cert.delta * r) * (1 + 1e-12)
    assert cert.empirical_rate >= cert.delta - 0.05


def test_certificate_input_checks():
    with pytest.raises(ValueError):
        certify_decay(U0, 1, 2, 1, [2, 1])
    with pytest.raises(NotContractiveError):
        certify_decay(U0, 0, 2, 1, [1])


# -- slices -----------------------------------------------------------------------------

def test_damped_slice_examples(rng):
    t = random_aligned_operator(rng, Grid(1, 64, 8.0), 4)
    assert damped_slice(t, [0.0]).as_dict() == t.as_dict()
    s = damped_slice(unit([0, 2]), [0.5])
    assert s.coefficient([0, 2]) == pytest.approx(math.exp(-1))
    with pytest.raises(DimensionMismatchError):
        damped_slice(t, [0.0, 1.0])


def test_support_probe_examples():
    rho = [2.0, 4.0, 8.0, 16.0]
    assert slice_support_probe(U0, rho) == 0
    t = axpy(1, unit([0, 2]), unit([0, -3]))
    assert slice_support_probe(t, rho) == pytest.approx(3, rel=1e-3)
    assert slice_support_probe(axpy(1, unit([1, 0]), unit([-2, 0])), rho) == 0


def test_random_channel_margin():
    for seed in range(5):
        t = random_channel(5, seed, grid=Grid(1, 256, 8.0))
        assert off_identity_ratio(t) == pytest.approx(0.8, rel=1e-12)
        assert len(t) == 6
        assert Grid(1, 256, 8.0).is_aligned_time(t.points[:, 0])
