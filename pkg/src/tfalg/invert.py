"""Inversion inside the algebra and the quantitative statements around it.

Neumann series in two flavours (contraction about the identity coefficient,
and the symmetric T*T series), a closed-form bound on the inverse norm,
Gelfand spectral-radius estimates, exponential-decay certificates for inverse
coefficients, and damped slice operators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core import (
    TFOperator,
    Weight,
    adjoint,
    axpy_tracked,
    compose_tracked,
    norm_av,
    reduce_terms,
    scale,
    support_radius,
    term_cap,
    truncate,
)
from .exceptions import ConvergenceError, DimensionMismatchError, NotContractiveError


@dataclass
class InversionReport:
    inverse: TFOperator
    mode: str
    iterations: int
    residual_av: float
    a_bound: float
    b_bound: float
    ratio: float
    truncation_mass: float = 0.0
    tail_bound: float = float("nan")

    def to_dict(self) -> dict:
        from .io import operator_to_dict

        return {
            "mode": self.mode,
            "iterations": self.iterations,
            "residual_av": self.residual_av,
            "a_bound": self.a_bound,
            "b_bound": self.b_bound,
            "ratio": self.ratio,
            "truncation_mass": self.truncation_mass,
            "inverse": operator_to_dict(self.inverse),
        }


@dataclass
class DecayCertificate:
    delta: float
    c_const: float
    tail_samples: list = field(default_factory=list)
    certified: bool = True
    empirical_rate: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "c_const": self.c_const,
            "tails": [[float(r), float(s)] for r, s in self.tail_samples],
            "certified": self.certified,
            "empirical_rate": self.empirical_rate,
        }


def _residual(t: TFOperator, inv: TFOperator, v: Weight | None) -> float:
    """max(||t inv - 1||, ||inv t - 1||) in the v-norm, plus any mass dropped while forming them."""
    eye = TFOperator.identity(t.dim)
    worst = 0.0
    for lhs, rhs in ((t, inv), (inv, t)):
        prod, lost = compose_tracked(lhs, rhs, v)
        diff, lost2 = axpy_tracked(-1.0, eye, prod, v)
        worst = max(worst, norm_av(diff, v) + lost + lost2)
    return worst


def _series(t, first, step, prefactor, v, tol, max_iter, budget, mode, a, b, ratio, estimate, tail=None):
    """Sum prefactor * (first + step first + step^2 first + ...) until the residual meets tol.

    The honest residual costs two full products with the partial inverse, so it
    is only evaluated once ``estimate(power)`` (a cheap proxy for the size of the
    next term) plus the dropped mass falls below ``tol``, and on every step after.
    """
    power = first
    total = first
    trunc_mass = 0.0
    inverse = scale(prefactor, total)
    residual = _residual(t, inverse, v)
    t_norm = abs(prefactor) * norm_av(t, v)
    checking = False
    n = 0
    while residual is None or residual > tol:
        if n >= max_iter:
            if residual is None:
                residual = _residual(t, inverse, v)
            report = InversionReport(inverse, mode, n, residual, a, b, ratio, trunc_mass)
            raise ConvergenceError(f"residual {residual:.3e} above tol {tol:.3e} after {n} iterations", report)
        power, lost = compose_tracked(step, power, v)
        power, cut = truncate(power, v, budget)
        trunc_mass += lost + cut
        total, lost = axpy_tracked(1.0, power, total, v, cap=term_cap())
        trunc_mass += lost
        n += 1
        inverse = scale(prefactor, total)
        checking = checking or estimate(power) + trunc_mass * t_norm <= tol
        residual = _residual(t, inverse, v) if checking else None
    report = InversionReport(inverse, mode, n, residual, a, b, ratio, trunc_mass)
    if tail is not None:
        report.tail_bound = tail(n)
    return report


def _expected_terms(q: float, tol: float) -> int:
    if q <= 0.0:
        return 1
    return max(1, int(math.ceil(math.log(tol / 4.0) / math.log(q))) + 1)


def neumann_invert_contraction(t: TFOperator, v: Weight | None = None, tol: float = 1e-6,
                               max_iter: int = 2000, truncation_budget: float | None = None) -> InversionReport:
    """Invert ``t = c0 (1 - R)`` by the series sum R^n / c0, with ||R||_v < 1.

    The stored ``residual_av`` is the two-sided residual recomputed from the
    returned inverse (plus any mass dropped in that computation), so it is an
    honest bound rather than an a-priori estimate. ``a_bound``/``b_bound`` are
    the bounds |c0|^2 (1 -+ q)^2 implied by the contraction.
    """
    d = t.dim
    c0 = t.coefficient(np.zeros(2 * d))
    if c0 == 0:
        raise NotContractiveError("identity coefficient is zero; contraction mode not applicable")
    eye = TFOperator.identity(d)
    off = axpy_tracked(-c0, eye, t)[0]
    q = norm_av(off, v) / abs(c0)
    if q >= 1.0:
        raise NotContractiveError(f"off-identity mass ratio {q:.4g} >= 1; not contractive")
    step = scale(-1.0 / c0, off)
    a = abs(c0) ** 2 * (1.0 - q) ** 2
    b = abs(c0) ** 2 * (1.0 + q) ** 2
    if truncation_budget is None:
        truncation_budget = tol * (1.0 - q) / (4.0 * (1.0 + q) * _expected_terms(q, tol))
    # the residual of the partial sum through R^n is R^(n+1)
    return _series(t, eye, step, 1.0 / c0, v, tol, max_iter, truncation_budget,
                   "contraction", a, b, (b - a) / (b + a), lambda pw: q * norm_av(pw, v))


def neumann_invert_symmetric(t: TFOperator, v: Weight | None, a_bound: float, b_bound: float,
                             tol: float = 1e-6, max_iter: int = 5000,
                             truncation_budget: float | None = None) -> InversionReport:
    """T^{-1} = (2/(A+B)) sum_n (1 - 2/(A+B) T*T)^n T*, given A <= T*T <= B."""
    if not (a_bound > 0 and a_bound <= b_bound and math.isfinite(b_bound)):
        raise NotContractiveError(f"invalid spectral bounds A={a_bound}, B={b_bound}")
    d = t.dim
    theta = 2.0 / (a_bound + b_bound)
    ratio = (b_bound - a_bound) / (b_bound + a_bound)
    ts = adjoint(t)
    tt = compose_tracked(ts, t, v)[0]
    step = axpy_tracked(-theta, tt, TFOperator.identity(d))[0]
    if truncation_budget is None:
        scale_v = max(1.0, norm_av(t, v))
        truncation_budget = tol * (1.0 - ratio) / (8.0 * scale_v * _expected_terms(ratio, tol))
    ts_norm = norm_av(ts, v)

    def tail(n):
        # operator-norm remainder of the truncated series
        return theta * ratio ** (n + 1) / (1.0 - ratio) * ts_norm if ratio < 1 else math.inf

    t_norm = norm_av(t, v)
    return _series(t, ts, step, theta, v, tol, max_iter, truncation_budget,
                   "symmetric", a_bound, b_bound, ratio, lambda pw: theta * t_norm * norm_av(pw, v), tail)


def inverse_norm_bound(t: TFOperator, c: float = 1.0, m: int = 0,
                       a_bound: float = 1.0, b_bound: float = 1.0) -> float:
    """(C rho^m ||T||_v / A) (m+N)! ((A+B)/(2A))^(m+N), v = C(1+|.|)^m, rho = max(1, 2 R0)."""
    if not (a_bound > 0 and a_bound <= b_bound):
        raise NotContractiveError(f"invalid spectral bounds A={a_bound}, B={b_bound}")
    if m < 0 or int(m) != m:
        raise ValueError("m must be a nonnegative integer")
    n_terms = len(t)
    rho = max(1.0, 2.0 * support_radius(t))
    t_norm = norm_av(t, Weight.polynomial(m, c))
    k = int(m) + n_terms
    log_bound = (math.log(c) + m * math.log(rho) + math.log(t_norm) - math.log(a_bound)
                 + math.lgamma(k + 1) + k * math.log((a_bound + b_bound) / (2.0 * a_bound)))
    return math.exp(log_bound) if log_bound < 700 else math.inf


class GelfandEstimate(NamedTuple):
    estimates: list
    extrapolated: float
    unweighted: list


def spectral_radius_gelfand(t: TFOperator, v: Weight | None = None, n_max: int = 20,
                            cap: int | None = None) -> GelfandEstimate:
    """||t^n||_v^(1/n) for n = 1..n_max and their minimum.

    Each estimate includes the mass dropped while forming the power, so it
    stays an upper bound on the spectral radius. For admissible weights the
    spectral radius does not depend on the weight, so the unweighted roots
    also bound it and enter the minimum.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    v = Weight.constant() if v is None else v
    one = Weight.constant()
    estimates, plain = [], []
    pw = TFOperator.identity(t.dim)
    lost_v = lost_1 = 0.0
    for n in range(1, n_max + 1):
        prev = pw
        pw, lv = compose_tracked(prev, t, v, cap)
        l1 = lv if v.kind == "constant" else compose_tracked(prev, t, None, cap)[1]
        lost_v = lost_v * norm_av(t, v) + lv
        lost_1 = lost_1 * norm_av(t) + l1
        estimates.append((norm_av(pw, v) + lost_v) ** (1.0 / n))
        plain.append((norm_av(pw, one) + lost_1) ** (1.0 / n))
    extrapolated = min(estimates)
    if v.admissible:
        extrapolated = min(extrapolated, min(plain))
    return GelfandEstimate(estimates, extrapolated, plain)


def residual_radius(t: TFOperator, a_bound: float, b_bound: float) -> float:
    """Support radius of 1 - 2/(A+B) T*T."""
    theta = 2.0 / (a_bound + b_bound)
    tt = compose_tracked(adjoint(t), t)[0]
    r = axpy_tracked(-theta, tt, TFOperator.identity(t.dim))[0]
    return support_radius(r) if len(r) else 0.0


def tail_sums(op: TFOperator, radii: Sequence[float]) -> list:
    """sum_{|mu| >= R} |d_mu| for each R."""
    if len(op) == 0:
        return [0.0 for _ in radii]
    r = np.linalg.norm(op.points, axis=1)
    mags = np.abs(op.coeffs)
    return [math.fsum(mags[r >= rad]) for rad in radii]


def _regression_rate(radii, tails) -> float:
    rr = np.asarray(radii, dtype=float)
    tt = np.asarray(tails, dtype=float)
    ok = tt > 0
    if np.count_nonzero(ok) < 2:
        return math.inf if np.count_nonzero(ok) <= 1 and tt[-1] == 0 else float("nan")
    slope = np.polyfit(rr[ok], np.log(tt[ok]), 1)[0]
    return float(-slope)


def certify_decay(inverse: TFOperator, a_bound: float, b_bound: float, r0: float,
                  radii: Sequence[float]) -> DecayCertificate:
    """Tail certificate sum_{|mu|>=R} |d_mu| <= C e^{-delta R} on the sampled radii.

    delta = ln((B+A)/(2(B-A))) / r0 whenever that is positive (B < 3A); the
    constant C is the smallest one consistent with every sample. Otherwise the
    rate comes from a log-linear fit of the tails and ``certified`` is False.
    """
    radii = [float(x) for x in radii]
    if not radii or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be nonempty and strictly increasing")
    if not (0 < a_bound <= b_bound):
        raise NotContractiveError(f"invalid spectral bounds A={a_bound}, B={b_bound}")
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    tails = tail_sums(inverse, radii)
    empirical = _regression_rate(radii, tails)
    if b_bound > a_bound and (b_bound + a_bound) / (2.0 * (b_bound - a_bound)) > 1.0:
        delta = math.log((b_bound + a_bound) / (2.0 * (b_bound - a_bound))) / r0
        certified = True
    elif b_bound == a_bound:
        # R = 0: the series stops after one term, any rate works
        delta, certified = 1.0 / r0, True
    else:
        delta = empirical if math.isfinite(empirical) and empirical > 0 else 0.0
        certified = False
    c_const = max((s * math.exp(delta * r) for r, s in zip(radii, tails)), default=0.0)
    return DecayCertificate(delta, c_const, list(zip(radii, tails)), certified, empirical)


def damped_slice(t: TFOperator, y) -> TFOperator:
    """Coefficients multiplied by e^{-<omega, y>}."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape[0] != t.dim:
        raise DimensionMismatchError(f"y has length {y.shape[0]}, operator dim is {t.dim}")
    if len(t) == 0:
        return t
    factor = np.exp(-(t.points[:, t.dim:] @ y))
    return reduce_terms(t.dim, t.points, t.coeffs * factor)[0]


def _probe_directions(t: TFOperator) -> np.ndarray:
    d = t.dim
    signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * d), indexing="ij")).reshape(d, -1).T / math.sqrt(d)
    w = t.points[:, d:]
    nrm = np.linalg.norm(w, axis=1)
    own = -w[nrm > 0] / nrm[nrm > 0, None]
    return np.vstack([signs, own]) if own.size else signs


def slice_growth(t: TFOperator, rho_list: Sequence[float]) -> np.ndarray:
    """log M(rho), M(rho) = max over probe directions y of ||damped_slice(t, rho y)||_A."""
    if len(t) == 0:
        return np.full(len(rho_list), -np.inf)
    dirs = _probe_directions(t)
    mags = np.abs(t.coeffs)
    expo = -(t.points[:, t.dim:] @ dirs.T)
    out = []
    for rho in rho_list:
        z = rho * expo + np.log(mags)[:, None]
        zmax = z.max(axis=0)
        out.append(float(np.max(zmax + np.log(np.exp(z - zmax).sum(axis=0)))))
    return np.array(out)


def slice_support_probe(t: TFOperator, rho_list: Sequence[float]) -> float:
    """Growth rate of log M(rho): estimates max |omega| over the support."""
    rho = np.asarray(rho_list, dtype=float)
    if rho.size == 0 or np.any(rho <= 0) or np.any(np.diff(rho) <= 0):
        raise ValueError("rho_list must be positive and strictly increasing")
    if len(t) == 0:
        return 0.0
    logm = slice_growth(t, rho)
    if rho.size == 1:
        return float(max(0.0, logm[0] / rho[0]))
    slopes = np.diff(logm) / np.diff(rho)
    return float(max(0.0, slopes.max()))
