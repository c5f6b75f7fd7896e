"""Windows g whose time-frequency shifts over a finite set are orthonormal.

Construction: with Delta = Sigma - Sigma, pick shifts t_k with
<t_k, w_k> an odd multiple of pi for every nonzero frequency w_k of Delta,
let h_k = 1_E + 1_{t_k + E} for a small ball E, and take
g = sqrt(h_1 * ... * h_M), normalized. The Fourier transform of each h_k
vanishes at w_k, and the 2**M bumps of g are far enough apart that time
shifts from Delta never overlap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import _kernels
from .core import TFPoint, quantize
from .exceptions import GridError
from .oracle import Grid, GridFunction, apply_shift

# fraction of the smallest nonzero time difference used as bump radius
TAU_MIN_FRACTION = 0.45
DEFAULT_TAU = 1.0
MAX_PARITY_SEARCH = 100_000


@dataclass
class WindowPlan:
    sigma: list
    delta_set: list
    time_proj: list
    freq_proj: list
    tau_min: float
    tau_max: float
    shifts: list = field(default_factory=list)
    parities: list = field(default_factory=list)
    omegas: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.sigma[0].dim

    @property
    def m(self) -> int:
        return len(self.shifts)

    def to_dict(self) -> dict:
        pt = lambda p: {"t": list(p.t), "omega": list(p.omega)}  # noqa: E731
        return {
            "sigma": [pt(p) for p in self.sigma],
            "delta_set": [pt(p) for p in self.delta_set],
            "time_proj": [list(map(float, v)) for v in self.time_proj],
            "freq_proj": [list(map(float, v)) for v in self.freq_proj],
            "tau_min": self.tau_min,
            "tau_max": self.tau_max,
            "shifts": [list(map(float, v)) for v in self.shifts],
            "parities": [int(n) for n in self.parities],
            "omegas": [list(map(float, v)) for v in self.omegas],
        }


@dataclass
class GramReport:
    gram: np.ndarray
    max_deviation: float
    passed: bool
    tol: float

    def to_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "passed": self.passed,
            "tol": self.tol,
            "gram_re": self.gram.real.tolist(),
            "gram_im": self.gram.imag.tolist(),
        }


def _unique_rows(rows: np.ndarray) -> np.ndarray:
    keys = quantize(rows)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return rows[np.sort(idx)]


def _canonical_sign(w: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(w) > 0)
    return -w if nz.size and w[nz[0]] < 0 else w


def _next_shift(w: np.ndarray, bound: float, time_step: float | None):
    """Smallest shift t with <t, w> = (2n+1) pi and |t| > bound."""
    if time_step is None:
        wn = float(np.linalg.norm(w))
        n = max(0, math.ceil((bound * wn / math.pi - 1.0) / 2.0))
        while (2 * n + 1) * math.pi / wn <= bound:
            n += 1
        return w / wn * ((2 * n + 1) * math.pi / wn), n
    ax = int(np.argmax(np.abs(w)))
    wa = float(w[ax])
    n = max(0, math.ceil((bound * abs(wa) / math.pi - 1.0) / 2.0))
    for _ in range(MAX_PARITY_SEARCH):
        s = (2 * n + 1) * math.pi / wa
        q = s / time_step
        if abs(s) > bound and abs(q - round(q)) <= 1e-9 * max(1.0, abs(q)):
            t = np.zeros_like(w)
            t[ax] = round(q) * time_step
            return t, n
        n += 1
    raise GridError(f"no grid-aligned shift with odd-pi product found for frequency {w.tolist()}")


def plan_window(sigma, time_step: float | None = None) -> WindowPlan:
    """Shifts, radii and parities for a window orthonormalizing ``sigma``.

    ``time_step`` restricts the shifts t_k to multiples of a grid spacing, so
    the realized window is exact on that grid (shifts are then taken along
    the coordinate axis of the largest frequency component).
    """
    pts = [p if isinstance(p, TFPoint) else TFPoint.from_vector(p) for p in sigma]
    if not pts:
        raise ValueError("sigma must be nonempty")
    d = pts[0].dim
    vecs = np.array([p.vector for p in pts])
    if vecs.shape[1] != 2 * d:
        raise ValueError("all points of sigma must share the dimension")
    if _unique_rows(vecs).shape[0] != vecs.shape[0]:
        raise ValueError("points of sigma must be pairwise distinct")
    diffs = _unique_rows((vecs[:, None, :] - vecs[None, :, :]).reshape(-1, 2 * d))
    times = _unique_rows(diffs[:, :d])
    freqs = _unique_rows(diffs[:, d:])
    tnorm = np.linalg.norm(times, axis=1)
    nonzero_t = tnorm[tnorm > 0]
    if nonzero_t.size:
        tau_min = TAU_MIN_FRACTION * float(nonzero_t.min())
        tau_max = float(nonzero_t.max())
    else:
        tau_min = tau_max = DEFAULT_TAU
    # h_k vanishes at -w_k as well, so one representative per +-pair suffices
    omegas = _unique_rows(np.array([_canonical_sign(w) for w in freqs if np.any(w != 0)]).reshape(-1, d))
    order = np.lexsort(quantize(omegas).T[::-1]) if omegas.size else []
    omegas = omegas[order] if omegas.size else omegas
    m = omegas.shape[0]
    shifts, parities, acc = [], [], 0.0
    for k in range(m):
        bound = tau_max if k == 0 else acc + 2 * m * tau_max
        t, n = _next_shift(omegas[k], bound, time_step)
        shifts.append(t)
        parities.append(n)
        acc += float(np.linalg.norm(t))
    return WindowPlan(
        sigma=pts,
        delta_set=[TFPoint.from_vector(v) for v in diffs],
        time_proj=list(times),
        freq_proj=list(freqs),
        tau_min=tau_min,
        tau_max=tau_max,
        shifts=shifts,
        parities=parities,
        omegas=list(omegas),
    )


def required_half_length(plan: WindowPlan) -> float:
    """Smallest L for which :func:`realize_window` fits the window and its shifts."""
    spread = 0.5 * sum(float(np.abs(t).max()) for t in plan.shifts) if plan.shifts else 0.0
    reach = max((float(np.abs(p.t).max()) for p in plan.sigma), default=0.0)
    return spread + plan.tau_min + reach


def _ball(radius: float, h: float, d: int) -> np.ndarray:
    k = int(math.floor(radius / h + 1e-9))
    ax = np.arange(-k, k + 1) * h
    mesh = np.meshgrid(*([ax] * d), indexing="ij")
    r2 = sum(m ** 2 for m in mesh)
    return (r2 <= radius ** 2 * (1 + 1e-12)).astype(float)


def _bump_pair(ball: np.ndarray, steps: np.ndarray):
    """1_E + 1_{t+E} on a local box; returns (array, index of its origin corner)."""
    d = ball.ndim
    k = (ball.shape[0] - 1) // 2
    lo = np.minimum(0, steps) - k
    hi = np.maximum(0, steps) + k
    arr = np.zeros(tuple(int(x) for x in hi - lo + 1))
    for off in (np.zeros(d, dtype=int), steps):
        start = off - k - lo
        sl = tuple(slice(int(s), int(s) + ball.shape[a]) for a, s in enumerate(start))
        arr[sl] += ball
    return arr, lo


def _convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == 1:
        return _kernels.convolve_full(np.ascontiguousarray(a), np.ascontiguousarray(b))
    import scipy.signal

    return scipy.signal.convolve(a, b, mode="full", method="direct")


def bump_functions(plan: WindowPlan, grid: Grid):
    """Local samples of every h_k with their coordinate origins: list of (array, origin_coords)."""
    d, h = plan.dim, grid.h
    m = plan.m
    radius = plan.tau_min / m if m else plan.tau_min
    ball = _ball(radius, h, d)
    out = []
    for t in plan.shifts:
        q = np.asarray(t) / h
        if np.any(np.abs(q - np.rint(q)) > 1e-9 * np.maximum(1.0, np.abs(q))):
            raise GridError("window shifts are not grid aligned; plan with time_step=grid.h")
        arr, lo = _bump_pair(ball, np.rint(q).astype(int))
        out.append((arr, lo * h))
    if not out:
        k = (ball.shape[0] - 1) // 2
        out.append((ball, np.full(d, -k) * h))
    return out


def fourier_at(arr: np.ndarray, origin: np.ndarray, h: float, w) -> complex:
    """Grid Fourier transform h^d sum f(x) e^{-i<w, x>} at an exact frequency."""
    d = arr.ndim
    w = np.atleast_1d(np.asarray(w, dtype=float))
    idx = np.nonzero(arr)
    x = [origin[a] + idx[a] * h for a in range(d)]
    phase = sum(w[a] * x[a] for a in range(d))
    return complex(h ** d * np.sum(arr[idx] * np.exp(-1j * phase)))


def fourier_zero_residuals(plan: WindowPlan, grid: Grid) -> list:
    """|F(h_k)(w_k)| for every planned shift."""
    if not plan.shifts:
        return []
    return [abs(fourier_at(arr, org, grid.h, w))
            for (arr, org), w in zip(bump_functions(plan, grid), plan.omegas)]


def realize_window(plan: WindowPlan, grid: Grid) -> GridFunction:
    """Sample g = sqrt(h_1 * ... * h_M) / norm on ``grid``, bump cloud centred at the origin."""
    d, h = plan.dim, grid.h
    if grid.d != d:
        raise GridError(f"grid dim {grid.d} vs plan dim {d}")
    need = required_half_length(plan)
    if need >= grid.L:
        raise GridError(f"grid too small: need L > {need:.6g}, have {grid.L}")
    bumps = bump_functions(plan, grid)
    acc, origin = bumps[0]
    for arr, org in bumps[1:]:
        acc = _convolve(acc, arr) * h ** d
        origin = origin + org
    acc = np.maximum(acc, 0.0)
    # centre the cloud on a grid point
    extent = origin + (np.array(acc.shape) - 1) * h
    centre = np.rint(0.5 * (origin + extent) / h) * h
    start = np.rint((origin - centre + grid.L) / h).astype(int)
    if np.any(start < 0) or np.any(start + np.array(acc.shape) > grid.n_samples):
        raise GridError(f"grid too small: need L > {need:.6g}, have {grid.L}")
    vals = np.zeros(grid.shape)
    sl = tuple(slice(int(s), int(s) + acc.shape[a]) for a, s in enumerate(start))
    vals[sl] = np.sqrt(acc)
    f = GridFunction(grid, vals.ravel())
    return GridFunction(grid, f.values / f.norm())


def verify_orthonormal(g: GridFunction, sigma, tol: float = 1e-5, mode: str = "auto") -> GramReport:
    """Gram matrix <U_sj g, U_sk g> on the grid against the identity."""
    pts = [p if isinstance(p, TFPoint) else TFPoint.from_vector(p) for p in sigma]
    shifted = [apply_shift(g, p, mode) for p in pts]
    n = len(shifted)
    gram = np.empty((n, n), dtype=np.complex128)
    for j, k in product(range(n), range(n)):
        gram[j, k] = shifted[j].inner(shifted[k])
    dev = float(np.abs(gram - np.eye(n)).max()) if n else 0.0
    return GramReport(gram, dev, dev <= tol, tol)
