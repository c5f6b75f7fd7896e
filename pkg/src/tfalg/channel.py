"""Random multipath (delay-Doppler) channels and test signals."""
from __future__ import annotations

import math

import numpy as np

from .core import TFOperator, norm_av
from .oracle import Grid, GridFunction

DEFAULT_MARGIN = 0.8


def random_channel(k: int, seed: int, d: int = 1, margin: float = DEFAULT_MARGIN,
                   t_max: float = 2.0, omega_max: float = 4.0, grid: Grid | None = None) -> TFOperator:
    """Direct path U_0 plus ``k`` scattered paths with total mass ``margin``.

    Off-origin coefficients are complex Gaussian, rescaled so that
    sum_{lam != 0} |c_lam| = margin |c_0| with c_0 = 1. Supports are uniform
    in the box |t_j| <= t_max, |omega_j| <= omega_max; with ``grid`` they are
    snapped to multiples of h (time) and pi / L (frequency) so the grid oracle
    is exact.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if not 0 <= margin < 1:
        raise ValueError("margin must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    origin = np.zeros(2 * d)
    pts = []
    while len(pts) < k:
        t = rng.uniform(-t_max, t_max, d)
        w = rng.uniform(-omega_max, omega_max, d)
        if grid is not None:
            t = np.rint(t / grid.h) * grid.h
            w = np.rint(w / grid.fundamental_frequency) * grid.fundamental_frequency
        p = np.concatenate([t, w])
        if np.allclose(p, origin) or any(np.allclose(p, q) for q in pts):
            continue
        pts.append(p)
    coeffs = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    if k:
        coeffs *= margin / np.abs(coeffs).sum()
    terms = [(origin[:d], origin[d:], 1.0)] + [(p[:d], p[d:], c) for p, c in zip(pts, coeffs)]
    return TFOperator.from_terms(d, terms)


def off_identity_ratio(t: TFOperator) -> float:
    """sum_{lam != 0} |c_lam| / |c_0| (infinite when c_0 = 0)."""
    c0 = t.coefficient(np.zeros(2 * t.dim))
    if c0 == 0:
        return math.inf
    return (norm_av(t) - abs(c0)) / abs(c0)


def gaussian_signal(grid: Grid, width: float = 1.0, chirp: float = 0.5) -> GridFunction:
    """Unit-norm chirped Gaussian exp(-|x|^2 / (2 width^2) + i chirp |x|^2)."""
    def f(x):
        r2 = np.sum(np.atleast_2d(x.T).T ** 2, axis=1) if grid.d > 1 else x ** 2
        return np.exp(-r2 / (2.0 * width ** 2) + 1j * chirp * r2)

    g = GridFunction.from_callable(grid, f)
    return GridFunction(grid, g.values / g.norm())
