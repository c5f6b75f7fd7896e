"""Brute-force ground truth: operators as dense matrices on a periodic grid.

The grid discretizes [-L, L)^d with ``n_samples`` points per axis. Time shifts
are exact circular rolls in ``aligned`` mode (t a multiple of the spacing h) or
trigonometric interpolation in ``bandlimited`` mode; frequency shifts are
always the exact diagonal phase e^{i<w, x_k>}.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .core import TFOperator, compose, adjoint
from .exceptions import GridError, ResourceLimitError

DEFAULT_POINT_CAP = 4096
ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class Grid:
    d: int
    n_samples: int
    L: float
    cap: int = DEFAULT_POINT_CAP

    def __post_init__(self):
        n = self.n_samples
        if self.d < 1:
            raise GridError("grid dimension must be >= 1")
        if n < 8 or n & (n - 1):
            raise GridError(f"n_samples must be a power of two >= 8, got {n}")
        if not self.L > 0:
            raise GridError("half length L must be positive")
        if n ** self.d > self.cap:
            raise ResourceLimitError(f"{n}^{self.d} grid points exceed the cap of {self.cap}")

    @classmethod
    def default(cls, d: int = 1) -> "Grid":
        n = {1: 256, 2: 64}.get(d, 8)
        return cls(d, n, 8.0)

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n_samples

    @property
    def size(self) -> int:
        return self.n_samples ** self.d

    @property
    def shape(self) -> tuple:
        return (self.n_samples,) * self.d

    @property
    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n_samples)

    def coords(self) -> np.ndarray:
        """(size, d) sample coordinates, row-major."""
        mesh = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def fundamental_frequency(self) -> float:
        return math.pi / self.L

    def is_aligned_time(self, t) -> bool:
        s = np.asarray(t, dtype=float) / self.h
        return bool(np.all(np.abs(s - np.rint(s)) <= ALIGN_TOL * np.maximum(1.0, np.abs(s))))

    def is_grid_frequency(self, w) -> bool:
        s = np.asarray(w, dtype=float) / self.fundamental_frequency
        return bool(np.all(np.abs(s - np.rint(s)) <= ALIGN_TOL * np.maximum(1.0, np.abs(s))))

    def to_dict(self) -> dict:
        return {"d": self.d, "n_samples": self.n_samples, "L": self.L}


@dataclass(frozen=True)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128).ravel()
        if vals.shape[0] != self.grid.size:
            raise GridError(f"{vals.shape[0]} values for a grid of {self.grid.size} points")
        object.__setattr__(self, "values", vals)

    def inner(self, other: "GridFunction") -> complex:
        """<f, g> = h^d sum f conj(g)."""
        return complex(self.grid.h ** self.grid.d * np.vdot(other.values, self.values))

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    @classmethod
    def from_callable(cls, grid: Grid, func) -> "GridFunction":
        x = grid.coords()
        return cls(grid, func(x if grid.d > 1 else x[:, 0]))


# -- applying shifts -----------------------------------------------------------

def _resolve_mode(grid: Grid, times: np.ndarray, mode: str) -> str:
    if mode == "auto":
        return "aligned" if grid.is_aligned_time(times) else "bandlimited"
    if mode not in ("aligned", "bandlimited"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "aligned" and not grid.is_aligned_time(times):
        raise GridError("aligned mode needs time shifts that are integer multiples of h")
    return mode


def _shift_block(block: np.ndarray, grid: Grid, t: np.ndarray, w: np.ndarray, mode: str) -> np.ndarray:
    """U_{t,w} applied along the leading d axes of ``block`` (trailing axis = batch)."""
    d = grid.d
    out = block
    if np.any(t != 0):
        if mode == "aligned":
            steps = tuple(int(np.rint(ti / grid.h)) for ti in t)
            out = np.roll(out, steps, axis=tuple(range(d)))
        else:
            spec = np.fft.fftn(out, axes=tuple(range(d)))
            k = 2.0 * math.pi * np.fft.fftfreq(grid.n_samples, grid.h)
            for ax in range(d):
                shape = [1] * out.ndim
                shape[ax] = grid.n_samples
                spec = spec * np.exp(-1j * k * t[ax]).reshape(shape)
            out = np.fft.ifftn(spec, axes=tuple(range(d)))
    if np.any(w != 0):
        x = grid.axis
        phase = np.ones(grid.shape, dtype=np.complex128)
        for ax in range(d):
            shape = [1] * d
            shape[ax] = grid.n_samples
            phase = phase * np.exp(1j * w[ax] * x).reshape(shape)
        out = out * phase.reshape(grid.shape + (1,) * (out.ndim - d))
    return out


def apply_shift(f: GridFunction, lam, mode: str = "auto") -> GridFunction:
    """(U_lam f)(x_k) = e^{i<w, x_k>} f(x_k - t), periodic."""
    from .core import _as_point

    grid = f.grid
    vec = _as_point(lam, grid.d)
    t, w = vec[: grid.d], vec[grid.d:]
    mode = _resolve_mode(grid, t, mode)
    block = f.values.reshape(grid.shape + (1,))
    return GridFunction(grid, _shift_block(block, grid, t, w, mode).ravel())


def apply_operator(op: TFOperator, f: GridFunction, mode: str = "auto") -> GridFunction:
    grid = f.grid
    _check_dim(op, grid)
    mode = _resolve_mode(grid, op.points[:, : grid.d], mode)
    block = f.values.reshape(grid.shape + (1,))
    acc = np.zeros_like(block)
    for p, c in zip(op.points, op.coeffs):
        acc = acc + c * _shift_block(block, grid, p[: grid.d], p[grid.d:], mode)
    return GridFunction(grid, acc.ravel())


def _check_dim(op: TFOperator, grid: Grid):
    if op.dim != grid.d:
        from .exceptions import DimensionMismatchError

        raise DimensionMismatchError(f"operator dim {op.dim} vs grid dim {grid.d}")


def assemble_matrix(op: TFOperator, grid: Grid, mode: str = "auto") -> np.ndarray:
    """Dense matrix M with M @ f.values == (sum c U f).values."""
    _check_dim(op, grid)
    if grid.size > grid.cap:
        raise ResourceLimitError("grid exceeds the point cap")
    mode = _resolve_mode(grid, op.points[:, : grid.d], mode)
    eye = np.eye(grid.size, dtype=np.complex128).reshape(grid.shape + (grid.size,))
    acc = np.zeros_like(eye)
    for p, c in zip(op.points, op.coeffs):
        acc += c * _shift_block(eye, grid, p[: grid.d], p[grid.d:], mode)
    return acc.reshape(grid.size, grid.size)


def relative_frobenius(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(b), np.finfo(float).tiny)
    return float(np.linalg.norm(a - b) / scale)


# -- norms and bounds ------------------------------------------------------------

def opnorm_estimate(op: TFOperator, grid: Grid, iters: int = 300, mode: str = "auto",
                    rtol: float = 1e-12, seed: int = 0) -> float:
    """Largest singular value of the discretized operator.

    Power iteration on M^H M from a seeded random start. If the Rayleigh
    quotient has not settled to ``rtol`` after ``iters`` steps, the estimate is
    finished with a dense Hermitian eigensolve (the grid is within the cap);
    if even that is unavailable a ``RuntimeWarning`` flags the best value.
    """
    if len(op) == 0:
        return 0.0
    m = assemble_matrix(op, grid, mode)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)
    x /= np.linalg.norm(x)
    prev = 0.0
    est = 0.0
    for _ in range(iters):
        y = m.conj().T @ (m @ x)
        est = float(np.vdot(x, y).real)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
        if abs(est - prev) <= rtol * est:
            return math.sqrt(est)
        prev = est
    try:
        top = scipy.linalg.eigvalsh(m.conj().T @ m, subset_by_index=[grid.size - 1, grid.size - 1])
        return math.sqrt(max(float(top[0]), est))
    except (np.linalg.LinAlgError, ValueError):  # pragma: no cover
        warnings.warn("opnorm_estimate: power iteration did not converge", RuntimeWarning)
        return math.sqrt(est)


def frame_bounds_estimate(op: TFOperator, grid: Grid, margin: float = 0.01,
                          mode: str = "auto") -> tuple[float, float]:
    """(A, B) from the extreme eigenvalues of the matrix of T*T, widened by ``margin``.

    A <= 0 means the discretization is numerically singular.
    """
    tt = compose(adjoint(op), op)
    m = assemble_matrix(tt, grid, mode)
    m = 0.5 * (m + m.conj().T)
    ev = scipy.linalg.eigvalsh(m)
    return float(ev[0]) * (1.0 - margin), float(ev[-1]) * (1.0 + margin)


def spectral_radius_estimate(op: TFOperator, grid: Grid, mode: str = "auto") -> float:
    """Largest |eigenvalue| of the discretized operator."""
    if len(op) == 0:
        return 0.0
    return float(np.abs(scipy.linalg.eigvals(assemble_matrix(op, grid, mode))).max())


# -- binary GridFunction format ------------------------------------------------------

def write_gridfunction(path, f: GridFunction) -> None:
    """Little-endian interleaved (re, im) float64 plus a JSON sidecar ``<path>.json``."""
    path = Path(path)
    inter = np.empty(2 * f.values.shape[0], dtype="<f8")
    inter[0::2] = f.values.real
    inter[1::2] = f.values.imag
    path.write_bytes(inter.tobytes())
    sidecar = {"d": f.grid.d, "n_samples": f.grid.n_samples, "L": f.grid.L}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, sort_keys=True))


def read_gridfunction(path) -> GridFunction:
    path = Path(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    grid = Grid(int(meta["d"]), int(meta["n_samples"]), float(meta["L"]))
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    if raw.shape[0] != 2 * grid.size:
        raise GridError(f"{path} holds {raw.shape[0] // 2} samples, sidecar expects {grid.size}")
    return GridFunction(grid, raw[0::2] + 1j * raw[1::2])
