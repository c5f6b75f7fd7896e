"""Gabor-frame averages of <T g_mn, g~_mn> and the trace they converge to.

The frame {U_{beta n, 2 pi alpha m} g} lives on the periodic grid; its frame
operator is assembled densely over one full period of the lattice and the
canonical dual is g~ = S^{-1} g. For the truncated averages a_{M,N}(T) the
lattice sum is evaluated through the covariance U_z^* U_lam U_z = p(z, lam) U_lam,
so only <U_lam g, g~> is needed on the grid and M, N are not limited by the
grid period; :func:`direct_lattice_average` evaluates the same sum by shifting
the windows on the grid and serves as a cross-check for small M, N.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import TFOperator, adjoint, coeff_norms, compose, conjugation_phase, unit
from .exceptions import GridError, ResourceLimitError
from .oracle import Grid, GridFunction, _shift_block, apply_operator, apply_shift

EFFECTIVE_SUPPORT = 1e-12
_MAX_FRAME_ENTRIES = 2 ** 24


@dataclass(frozen=True)
class GaborSystem:
    grid: Grid
    alpha: float
    beta: float
    window: GridFunction
    dual: GridFunction
    frame_bounds: tuple = (float("nan"), float("nan"))
    reproduction_error: float = float("nan")

    @property
    def redundancy(self) -> float:
        return 1.0 / (self.alpha * self.beta) ** self.grid.d

    def element(self, m, n, dual: bool = False) -> GridFunction:
        """g_{m,n} = U_{beta n, 2 pi alpha m} g (or the dual)."""
        base = self.dual if dual else self.window
        m = np.atleast_1d(np.asarray(m, dtype=float))
        n = np.atleast_1d(np.asarray(n, dtype=float))
        lam = np.concatenate([self.beta * n, 2.0 * math.pi * self.alpha * m])
        return apply_shift(base, lam, "aligned")

    def support_radius(self, include_dual: bool = False) -> float:
        """Radius outside which the window (and optionally the dual) is below 1e-12 of its peak."""
        x = np.linalg.norm(self.grid.coords(), axis=1)
        radius = 0.0
        for f in (self.window, self.dual) if include_dual else (self.window,):
            mag = np.abs(f.values)
            radius = max(radius, float(x[mag >= EFFECTIVE_SUPPORT * mag.max()].max()))
        return radius

    def bandwidth(self, include_dual: bool = False) -> float:
        """Same as :meth:`support_radius` on the frequency side."""
        k = 2.0 * math.pi * np.fft.fftfreq(self.grid.n_samples, self.grid.h)
        mesh = np.meshgrid(*([k] * self.grid.d), indexing="ij")
        kn = np.sqrt(sum(q.ravel() ** 2 for q in mesh))
        radius = 0.0
        for f in (self.window, self.dual) if include_dual else (self.window,):
            spec = np.abs(np.fft.fftn(f.values.reshape(self.grid.shape))).ravel()
            radius = max(radius, float(kn[spec >= EFFECTIVE_SUPPORT * spec.max()].max()))
        return radius


@dataclass
class TraceEstimate:
    value: complex
    m_trunc: int
    n_trunc: int
    convergence_trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "M": self.m_trunc,
            "N": self.n_trunc,
            "trace": [[int(m), int(n), float(v.real), float(v.imag)] for m, n, v in self.convergence_trace],
        }


def _is_integer(x: float, tol: float = 1e-9) -> bool:
    return abs(x - round(x)) <= tol * max(1.0, abs(x))


def _check_lattice(grid: Grid, alpha: float, beta: float):
    if not (alpha > 0 and beta > 0):
        raise GridError("alpha and beta must be positive")
    if not alpha * beta < 1:
        raise GridError("alpha * beta must be < 1 (frame regime)")
    checks = {
        "beta / h": beta / grid.h,
        "2 L / beta": 2.0 * grid.L / beta,
        "2 alpha L": 2.0 * alpha * grid.L,
        "1 / (h alpha)": 1.0 / (grid.h * alpha),
    }
    bad = [name for name, val in checks.items() if not _is_integer(val)]
    if bad:
        raise GridError(f"lattice ({alpha}, {beta}) incompatible with grid: {', '.join(bad)} not integer")


def gaussian_window(grid: Grid, width: float = 1.0) -> GridFunction:
    """L2-normalized Gaussian exp(-pi |x|^2 / width^2), periodized over neighbouring cells."""
    x = grid.coords()
    vals = np.zeros(grid.size)
    offsets = np.array(np.meshgrid(*([[-1, 0, 1]] * grid.d), indexing="ij")).reshape(grid.d, -1).T
    for off in offsets:
        y = x - 2.0 * grid.L * off
        vals += np.exp(-math.pi * np.sum(y ** 2, axis=1) / width ** 2)
    f = GridFunction(grid, vals)
    return GridFunction(grid, f.values / f.norm())


def _lattice_matrix(grid: Grid, base: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """All g_{m,n} over one lattice period as columns."""
    d = grid.d
    nt = int(round(2.0 * grid.L / beta))
    nf = int(round(1.0 / (grid.h * alpha)))
    count = (nt * nf) ** d
    if count * grid.size > _MAX_FRAME_ENTRIES:
        raise ResourceLimitError(f"frame matrix with {count} elements on {grid.size} points exceeds the cap")
    idx = np.array(np.meshgrid(*([np.arange(nt)] * d + [np.arange(nf)] * d), indexing="ij")).reshape(2 * d, -1).T
    cols = np.empty((grid.size, count), dtype=np.complex128)
    block = base.reshape(grid.shape + (1,))
    for j, row in enumerate(idx):
        t = beta * row[:d]
        w = 2.0 * math.pi * alpha * row[d:]
        cols[:, j] = _shift_block(block, grid, t, w, "aligned").ravel()
    return cols


def build_gabor(grid: Grid, alpha: float, beta: float, width: float = 1.0, tight: bool = False,
                reproduction_tol: float = 1e-6) -> GaborSystem:
    """Gaussian Gabor frame on ``grid`` with its canonical dual.

    With ``tight=True`` the window is replaced by S^{-1/2} g, whose frame
    operator is the identity, and the dual equals the window.
    """
    _check_lattice(grid, alpha, beta)
    hd = grid.h ** grid.d
    g = gaussian_window(grid, width)
    cols = _lattice_matrix(grid, g.values, alpha, beta)
    s = hd * (cols @ cols.conj().T)
    s = 0.5 * (s + s.conj().T)
    ev, vecs = scipy.linalg.eigh(s)
    if ev[0] <= 1e-10 * ev[-1]:
        raise GridError(f"frame operator ill-conditioned (eigenvalues {ev[0]:.3e} .. {ev[-1]:.3e})")
    if tight:
        inv_sqrt = (vecs / np.sqrt(ev)) @ vecs.conj().T
        g = GridFunction(grid, inv_sqrt @ g.values)
        cols = _lattice_matrix(grid, g.values, alpha, beta)
        s = hd * (cols @ cols.conj().T)
        ev = scipy.linalg.eigvalsh(0.5 * (s + s.conj().T))
        dual = g
    else:
        dual = GridFunction(grid, scipy.linalg.solve(s, g.values, assume_a="her"))
    dual_cols = _lattice_matrix(grid, dual.values, alpha, beta)
    x = grid.coords()
    probe = np.exp(-math.pi * np.sum((x - 0.3) ** 2, axis=1) / 2.0) * np.exp(1j * x.sum(axis=1))
    recon = hd * (dual_cols @ (cols.conj().T @ probe))
    err = float(np.linalg.norm(recon - probe) / np.linalg.norm(probe))
    if err > reproduction_tol:
        raise GridError(f"frame reproduction error {err:.3e} above {reproduction_tol:.1e}")
    return GaborSystem(grid, alpha, beta, g, dual, (float(ev[0]), float(ev[-1])), err)


def frame_operator(sys: GaborSystem) -> np.ndarray:
    cols = _lattice_matrix(sys.grid, sys.window.values, sys.alpha, sys.beta)
    return sys.grid.h ** sys.grid.d * (cols @ cols.conj().T)


def _check_reliable(t: TFOperator, sys: GaborSystem):
    grid = sys.grid
    if t.dim != grid.d:
        from .exceptions import DimensionMismatchError

        raise DimensionMismatchError(f"operator dim {t.dim} vs grid dim {grid.d}")
    if len(t) == 0:
        return
    reach_t = float(np.abs(t.points[:, : grid.d]).max()) + sys.support_radius()
    reach_w = float(np.abs(t.points[:, grid.d:]).max()) + sys.bandwidth()
    if reach_t >= grid.L:
        raise GridError(f"time shifts plus window support reach {reach_t:.3g} >= L = {grid.L}")
    if reach_w >= math.pi / grid.h:
        raise GridError(f"frequency shifts plus bandwidth reach {reach_w:.3g} >= pi/h = {math.pi / grid.h:.3g}")


def window_overlaps(t: TFOperator, sys: GaborSystem) -> np.ndarray:
    """<U_lam g, g~> for every support point lam of ``t``."""
    out = np.empty(len(t), dtype=np.complex128)
    for i, p in enumerate(t.points):
        out[i] = apply_shift(sys.window, p, "auto").inner(sys.dual)
    return out


def _symmetric_partial_sums(terms_pos: np.ndarray, terms_neg: np.ndarray) -> np.ndarray:
    """S(k) = 1 + sum_{j=1..k} (pos_j + neg_j), for k = 0..K along the last axis."""
    acc = np.cumsum(terms_pos + terms_neg, axis=-1)
    lead = np.zeros(acc.shape[:-1] + (1,), dtype=acc.dtype)
    return 1.0 + np.concatenate([lead, acc], axis=-1)


def _lattice_sums(points: np.ndarray, d: int, alpha: float, beta: float, kmax: int) -> np.ndarray:
    """Per support point and per k <= kmax: (time-lattice sum, frequency-lattice sum) over |index| <= k.

    For d > 1 the lattice sums factor over axes; each factor uses the
    conjugation phase of a one-axis lattice point.
    """
    j = np.arange(1, kmax + 1, dtype=float)
    n_pts = points.shape[0]
    time_sum = np.ones((n_pts, kmax + 1), dtype=np.complex128)
    freq_sum = np.ones((n_pts, kmax + 1), dtype=np.complex128)
    for ax in range(d):
        for kind, acc in (("time", time_sum), ("freq", freq_sum)):
            z = np.zeros((kmax, 2 * d))
            if kind == "time":
                z[:, ax] = beta * j
            else:
                z[:, d + ax] = 2.0 * math.pi * alpha * j
            pos = np.stack([conjugation_phase(z, lam, d) for lam in points])
            neg = np.stack([conjugation_phase(-z, lam, d) for lam in points])
            acc *= _symmetric_partial_sums(pos, neg)
    return time_sum, freq_sum


def _checkpoints(m_max: int, n_max: int) -> list:
    top = max(m_max, n_max)
    ks, k = [], 1
    while k < top:
        ks.append(k)
        k *= 2
    pairs = [(min(k, m_max), min(k, n_max)) for k in ks]
    pairs.append((m_max, n_max))
    seen, out = set(), []
    for p in pairs:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def trace_estimate(t: TFOperator, sys: GaborSystem, m_max: int, n_max: int | None = None) -> TraceEstimate:
    """a_{M,N}(T) = (alpha beta)^-d (2M+1)^-d (2N+1)^-d sum_{|m|<=M, |n|<=N} <T g_mn, g~_mn>."""
    n_max = m_max if n_max is None else n_max
    if m_max < 0 or n_max < 0:
        raise ValueError("truncations must be nonnegative")
    _check_reliable(t, sys)
    d = sys.grid.d
    if len(t) == 0:
        zero = 0.0j
        return TraceEstimate(zero, m_max, n_max, [(m, n, zero) for m, n in _checkpoints(m_max, n_max)])
    overlaps = t.coeffs * window_overlaps(t, sys)
    kmax = max(m_max, n_max)
    time_sum, freq_sum = _lattice_sums(t.points, d, sys.alpha, sys.beta, kmax)
    norm = (sys.alpha * sys.beta) ** d

    def average(m, n):
        terms = overlaps * freq_sum[:, m] * time_sum[:, n]
        return complex(np.sum(terms) / (norm * (2 * m + 1) ** d * (2 * n + 1) ** d))

    trace = [(m, n, average(m, n)) for m, n in _checkpoints(m_max, n_max)]
    return TraceEstimate(trace[-1][2], m_max, n_max, trace)


def direct_lattice_average(t: TFOperator, sys: GaborSystem, m_max: int, n_max: int | None = None) -> complex:
    """a_{M,N}(T) by shifting window and dual on the grid; translates must stay inside the grid."""
    n_max = m_max if n_max is None else n_max
    grid = sys.grid
    if grid.d != 1:
        raise NotImplementedError("direct lattice average is implemented for d = 1")
    reach = sys.beta * n_max + sys.support_radius() + (np.abs(t.points[:, 0]).max() if len(t) else 0.0)
    if reach >= grid.L:
        raise GridError(f"lattice translates reach {reach:.3g} >= L = {grid.L}")
    total = 0.0j
    for m in range(-m_max, m_max + 1):
        for n in range(-n_max, n_max + 1):
            gmn = sys.element(m, n)
            dmn = sys.element(m, n, dual=True)
            total += apply_operator(t, gmn, "auto").inner(dmn)
    return total / (sys.alpha * sys.beta * (2 * m_max + 1) * (2 * n_max + 1))


def recover_coefficient(t: TFOperator, lam, sys: GaborSystem, m_max: int, n_max: int | None = None) -> complex:
    """Estimate c_lam as the trace of U_lam^* T."""
    return trace_estimate(compose(adjoint(unit(lam)), t), sys, m_max, n_max).value


def trace_properties_check(a: TFOperator, b: TFOperator, sys: GaborSystem, m_max: int,
                           n_max: int | None = None) -> dict:
    """Trace-property diagnostics: |g(ab) - g(ba)|, |g(a*a) - sum |c|^2|, and g(a*a)."""
    gab = trace_estimate(compose(a, b), sys, m_max, n_max).value
    gba = trace_estimate(compose(b, a), sys, m_max, n_max).value
    gaa = trace_estimate(compose(adjoint(a), a), sys, m_max, n_max).value
    l2 = coeff_norms(a)[1]
    return {
        "gamma_ab": gab,
        "gamma_ba": gba,
        "commutator_gap": abs(gab - gba),
        "gamma_aa": gaa,
        "l2_squared": l2 ** 2,
        "norm_gap": abs(gaa - l2 ** 2),
        "positivity": gaa.real,
    }
