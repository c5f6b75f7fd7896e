"""Finitely supported operators T = sum c_lambda U_lambda and their *-algebra.

Points lambda = (t, omega) of R^d x R^d are identified after quantization to
2**-32; coefficients below ``DROP_THRESHOLD`` are removed and their mass is
reported by the ``*_tracked`` variants.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .exceptions import DimensionMismatchError, EmptyOperatorError, ResourceLimitError

QUANTUM = 2.0 ** -32
DROP_THRESHOLD = 1e-15
_MAX_COORD = 2.0 ** 30
DEFAULT_TERM_CAP = 200_000


def term_cap() -> int:
    """Live-term cap, overridable through ``TFALG_TERM_CAP``."""
    return int(os.environ.get("TFALG_TERM_CAP", DEFAULT_TERM_CAP))


@dataclass(frozen=True)
class TFPoint:
    """Phase-space point (t, omega)."""

    t: tuple
    omega: tuple

    def __post_init__(self):
        t = tuple(float(x) for x in np.atleast_1d(self.t))
        w = tuple(float(x) for x in np.atleast_1d(self.omega))
        if len(t) == 0 or len(t) != len(w):
            raise DimensionMismatchError(f"t has length {len(t)}, omega has length {len(w)}")
        if not all(math.isfinite(x) for x in t + w):
            raise ValueError("TFPoint components must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "omega", w)

    @property
    def dim(self) -> int:
        return len(self.t)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.t + self.omega)

    @property
    def key(self) -> tuple:
        return tuple(quantize(self.vector).tolist())

    @classmethod
    def origin(cls, d: int = 1) -> "TFPoint":
        return cls((0.0,) * d, (0.0,) * d)

    @classmethod
    def from_vector(cls, vec) -> "TFPoint":
        vec = np.asarray(vec, dtype=float)
        d = vec.shape[0] // 2
        return cls(tuple(vec[:d]), tuple(vec[d:]))


def quantize(points: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(points, dtype=float) / QUANTUM).astype(np.int64)


def _as_point(p, d=None) -> np.ndarray:
    if isinstance(p, TFPoint):
        vec = p.vector
    else:
        vec = np.asarray(p, dtype=float).ravel()
    if d is not None and vec.shape[0] != 2 * d:
        raise DimensionMismatchError(f"point has {vec.shape[0]} components, expected {2 * d}")
    return vec


class TFOperator:
    """Immutable finite coefficient map lambda -> c_lambda.

    ``points`` is an (n, 2d) array of (t, omega) rows sorted by quantized key;
    ``coeffs`` the matching complex coefficients. Build instances with
    :meth:`from_terms`, :meth:`shift`, :meth:`identity` or :func:`reduce_terms`.
    """

    __slots__ = ("dim", "points", "coeffs", "_keys")

    def __init__(self, dim: int, points: np.ndarray, coeffs: np.ndarray, _keys=None):
        # trusted constructor: inputs already reduced
        self.dim = int(dim)
        self.points = np.asarray(points, dtype=float).reshape(-1, 2 * self.dim)
        self.coeffs = np.asarray(coeffs, dtype=np.complex128).ravel()
        self._keys = quantize(self.points) if _keys is None else _keys
        self.points.flags.writeable = False
        self.coeffs.flags.writeable = False

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, d: int = 1) -> "TFOperator":
        return cls(d, np.zeros((0, 2 * d)), np.zeros(0, dtype=np.complex128))

    @classmethod
    def identity(cls, d: int = 1, c: complex = 1.0) -> "TFOperator":
        return cls.shift([0.0] * d, [0.0] * d, c)

    @classmethod
    def shift(cls, t, omega, c: complex = 1.0) -> "TFOperator":
        """Single term c * U_{t, omega}."""
        p = TFPoint(tuple(np.atleast_1d(t)), tuple(np.atleast_1d(omega)))
        return reduce_terms(p.dim, p.vector[None, :], np.array([c], dtype=np.complex128))[0]

    @classmethod
    def from_terms(cls, d: int, terms: Iterable) -> "TFOperator":
        """From ``(t, omega, c)`` triples or ``(TFPoint, c)`` pairs; duplicates are summed."""
        pts, cs = [], []
        for term in terms:
            if len(term) == 2:
                p, c = term
                vec = _as_point(p, d)
            else:
                t, w, c = term
                vec = TFPoint(tuple(np.atleast_1d(t)), tuple(np.atleast_1d(w))).vector
                if vec.shape[0] != 2 * d:
                    raise DimensionMismatchError("term dimension does not match operator dimension")
            pts.append(vec)
            cs.append(complex(c))
        if not pts:
            return cls.zero(d)
        return reduce_terms(d, np.array(pts), np.array(cs, dtype=np.complex128))[0]

    # -- queries ----------------------------------------------------------
    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def __iter__(self):
        for p, c in zip(self.points, self.coeffs):
            yield TFPoint.from_vector(p), complex(c)

    def __repr__(self) -> str:
        return f"TFOperator(dim={self.dim}, terms={len(self)})"

    def coefficient(self, point) -> complex:
        key = quantize(_as_point(point, self.dim))
        hit = np.flatnonzero(np.all(self._keys == key, axis=1))
        return complex(self.coeffs[hit[0]]) if hit.size else 0.0j

    def as_dict(self) -> dict:
        """Quantized-key -> coefficient map, handy for exact comparisons."""
        return {tuple(k.tolist()): complex(c) for k, c in zip(self._keys, self.coeffs)}

    @property
    def keys(self) -> np.ndarray:
        return self._keys

    # -- algebra sugar ----------------------------------------------------
    def __matmul__(self, other: "TFOperator") -> "TFOperator":
        return compose(self, other)

    def __add__(self, other: "TFOperator") -> "TFOperator":
        return axpy(1.0, self, other)

    def __sub__(self, other: "TFOperator") -> "TFOperator":
        return axpy(-1.0, other, self)

    def __neg__(self) -> "TFOperator":
        return scale(-1.0, self)

    def __mul__(self, alpha) -> "TFOperator":
        return scale(alpha, self)

    __rmul__ = __mul__

    def adjoint(self) -> "TFOperator":
        return adjoint(self)


def _check_dims(a: TFOperator, b: TFOperator):
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def reduce_terms(d: int, points: np.ndarray, coeffs: np.ndarray, cap: int | None = None):
    """Accumulate coinciding quantized points and drop dead terms.

    Returns ``(operator, dropped_points, dropped_abs)``. Sums are compensated
    and taken in a fixed order (key, coordinates, coefficient), so the result
    does not depend on the order of the input rows.
    """
    points = np.ascontiguousarray(points, dtype=float).reshape(-1, 2 * d)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128).ravel()
    if points.shape[0] == 0:
        return TFOperator.zero(d), np.zeros((0, 2 * d)), np.zeros(0)
    if not np.all(np.isfinite(points)) or np.any(np.abs(points) > _MAX_COORD):
        raise ValueError("phase-space points must be finite and below 2**30 in magnitude")
    keys = quantize(points)
    re, im = coeffs.real.copy(), coeffs.imag.copy()
    sort_cols = [im, re] + [points[:, j] for j in range(2 * d - 1, -1, -1)] + \
        [keys[:, j] for j in range(2 * d - 1, -1, -1)]
    order = np.lexsort(sort_cols)
    keys, points, re, im = keys[order], points[order], re[order], im[order]
    if keys.shape[0] > 1:
        new = np.any(keys[1:] != keys[:-1], axis=1)
        starts = np.concatenate(([0], np.flatnonzero(new) + 1)).astype(np.int64)
    else:
        starts = np.zeros(1, dtype=np.int64)
    sums = _kernels.segment_sums(np.ascontiguousarray(re), np.ascontiguousarray(im), starts)
    rep_points = points[starts]
    rep_keys = keys[starts]
    live = np.abs(sums) >= DROP_THRESHOLD
    if cap is not None and np.count_nonzero(live) > cap:
        raise ResourceLimitError(f"{np.count_nonzero(live)} live terms exceed the cap of {cap}")
    op = TFOperator(d, rep_points[live], sums[live], _keys=rep_keys[live])
    return op, rep_points[~live], np.abs(sums[~live])


# -- *-algebra operations ----------------------------------------------------

def compose_tracked(a: TFOperator, b: TFOperator, v: "Weight | None" = None, cap: int | None = None):
    """Twisted convolution of the coefficient maps, plus the weighted dropped mass.

    The product of U_{t1,w1} and U_{t2,w2} is e^{-i<t1, w2>} U_{t1+t2, w1+w2}.
    """
    _check_dims(a, b)
    d = a.dim
    if len(a) == 0 or len(b) == 0:
        return TFOperator.zero(d), 0.0
    cap = term_cap() if cap is None else cap
    if len(a) * len(b) > 50 * cap:
        raise ResourceLimitError(f"product of {len(a)} x {len(b)} terms exceeds the working cap")
    pts, cs = _kernels.twisted_products(a.points, a.coeffs, b.points, b.coeffs, d)
    op, dpts, dabs = reduce_terms(d, pts, cs, cap=cap)
    return op, _weighted_mass(dpts, dabs, v)


def compose(a: TFOperator, b: TFOperator) -> TFOperator:
    """Coefficient map of the operator product ``a b``."""
    return compose_tracked(a, b)[0]


def adjoint(a: TFOperator) -> TFOperator:
    """(a*)_{(-t,-w)} = conj(c_{(t,w)}) e^{-i<t,w>}."""
    d = a.dim
    if len(a) == 0:
        return a
    tw = np.einsum("ij,ij->i", a.points[:, :d], a.points[:, d:])
    coeffs = np.conj(a.coeffs) * np.exp(-1j * tw)
    return reduce_terms(d, -a.points, coeffs)[0]


def scale(alpha: complex, a: TFOperator) -> TFOperator:
    return reduce_terms(a.dim, a.points, complex(alpha) * a.coeffs)[0]


def axpy_tracked(alpha: complex, a: TFOperator, b: TFOperator, v: "Weight | None" = None,
                 cap: int | None = None):
    _check_dims(a, b)
    pts = np.vstack([a.points, b.points])
    cs = np.concatenate([complex(alpha) * a.coeffs, b.coeffs])
    op, dpts, dabs = reduce_terms(a.dim, pts, cs, cap=cap)
    return op, _weighted_mass(dpts, dabs, v)


def axpy(alpha: complex, a: TFOperator, b: TFOperator) -> TFOperator:
    """alpha * a + b."""
    return axpy_tracked(alpha, a, b)[0]


def power(a: TFOperator, n: int, v: "Weight | None" = None, cap: int | None = None):
    """``(a**n, weighted dropped mass)`` by repeated left multiplication."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    result = TFOperator.identity(a.dim)
    dropped = 0.0
    for _ in range(n):
        # dropped mass of earlier factors is amplified by the later ones
        result, lost = compose_tracked(result, a, v, cap)
        dropped = dropped * norm_av(a, v) + lost
    return result, dropped


# -- weights -----------------------------------------------------------------

_KINDS = ("constant", "polynomial", "subexponential", "exponential")


@dataclass(frozen=True)
class Weight:
    """Radial submultiplicative weight v(lambda) = w(|lambda|).

    kinds and radial profiles::

        constant        w(r) = 1
        polynomial      w(r) = C (1 + r)**s
        subexponential  w(r) = exp(alpha r**beta),  0 < beta < 1
        exponential     w(r) = exp(alpha r)         (not GRS)
    """

    kind: str = "constant"
    s: float = 0.0
    c: float = 1.0
    alpha: float = 0.0
    beta: float = 0.5

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "polynomial" and (self.s < 0 or self.c <= 0):
            raise ValueError("polynomial weight needs s >= 0 and C > 0")
        if self.kind == "subexponential" and (self.alpha < 0 or not 0 < self.beta < 1):
            raise ValueError("subexponential weight needs alpha >= 0 and 0 < beta < 1")
        if self.kind == "exponential" and self.alpha <= 0:
            raise ValueError("exponential weight needs alpha > 0")

    @classmethod
    def constant(cls) -> "Weight":
        return cls("constant")

    @classmethod
    def polynomial(cls, s: float, c: float = 1.0) -> "Weight":
        return cls("polynomial", s=float(s), c=float(c))

    @classmethod
    def subexponential(cls, alpha: float, beta: float) -> "Weight":
        return cls("subexponential", alpha=float(alpha), beta=float(beta))

    @classmethod
    def exponential(cls, alpha: float) -> "Weight":
        return cls("exponential", alpha=float(alpha))

    @classmethod
    def parse(cls, spec: str) -> "Weight":
        """``constant``, ``polynomial:s[,C]``, ``subexp:alpha,beta``, ``exp:alpha``."""
        name, _, args = spec.partition(":")
        vals = [float(x) for x in args.split(",") if x.strip()]
        name = name.strip().lower()
        if name in ("constant", "const", "1"):
            return cls.constant()
        if name in ("polynomial", "poly"):
            return cls.polynomial(*vals)
        if name in ("subexponential", "subexp"):
            return cls.subexponential(*vals)
        if name in ("exponential", "exp"):
            return cls.exponential(*vals)
        raise ValueError(f"cannot parse weight spec {spec!r}")

    @property
    def admissible(self) -> bool:
        return self.kind != "exponential"

    def radial(self, r):
        """w(r) for scalar or array r >= 0."""
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            out = np.ones_like(r)
        elif self.kind == "polynomial":
            out = self.c * (1.0 + r) ** self.s
        elif self.kind == "subexponential":
            out = np.exp(self.alpha * r ** self.beta)
        else:
            out = np.exp(self.alpha * r)
        return out if out.ndim else float(out)

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.radial(np.linalg.norm(pts, axis=1))


def _weighted_mass(points, abs_coeffs, v):
    if abs_coeffs.size == 0:
        return 0.0
    if v is None:
        return float(abs_coeffs.sum())
    return float(np.dot(v(points), abs_coeffs))


# -- norms and support -------------------------------------------------------

def norm_av(a: TFOperator, v: Weight | None = None) -> float:
    """sum_lambda v(lambda) |c_lambda|; the plain l1 norm when ``v`` is None."""
    if len(a) == 0:
        return 0.0
    mags = np.abs(a.coeffs)
    if v is None or v.kind == "constant":
        return math.fsum(mags)
    return math.fsum(v(a.points) * mags)


def coeff_norms(a: TFOperator) -> tuple[float, float, float]:
    """(max |c|, l2, l1) of the coefficient sequence."""
    if len(a) == 0:
        return 0.0, 0.0, 0.0
    mags = np.abs(a.coeffs)
    return float(mags.max()), math.sqrt(math.fsum(mags ** 2)), math.fsum(mags)


def support_radius(a: TFOperator) -> float:
    if len(a) == 0:
        raise EmptyOperatorError("support radius of the zero operator is undefined")
    return float(np.linalg.norm(a.points, axis=1).max())


def truncate(a: TFOperator, v: Weight | None, budget: float):
    """Drop the smallest v|c| terms while the dropped weighted mass stays within ``budget``.

    Returns ``(truncated, discarded_mass)``.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if budget == 0 or len(a) == 0:
        return a, 0.0
    w = np.abs(a.coeffs) if v is None else v(a.points) * np.abs(a.coeffs)
    order = np.argsort(w, kind="stable")
    csum = np.cumsum(w[order])
    n_drop = int(np.searchsorted(csum, budget, side="right"))
    if n_drop == 0:
        return a, 0.0
    keep = np.sort(order[n_drop:])
    out = TFOperator(a.dim, a.points[keep], a.coeffs[keep], _keys=a.keys[keep])
    return out, math.fsum(w[order[:n_drop]])


def power_norm_bound(a: TFOperator, v: Weight, n: int, grid=None, mode: str = "auto") -> float:
    """(n+1)**(|supp a|/2) * w(n R0) * ||a**n||_op, with the operator norm from the grid oracle."""
    from .oracle import Grid, opnorm_estimate

    if n < 1:
        raise ValueError("n must be >= 1")
    if len(a) == 0:
        raise EmptyOperatorError("power-norm bound of the zero operator")
    r0 = support_radius(a)
    an, _ = power(a, n)
    grid = Grid.default(a.dim) if grid is None else grid
    op = opnorm_estimate(an, grid, mode=mode) if len(an) else 0.0
    return (n + 1) ** (len(a) / 2.0) * float(v.radial(n * r0)) * op


def unit(point) -> TFOperator:
    """U_lambda with unit coefficient."""
    vec = _as_point(point)
    d = vec.shape[0] // 2
    return TFOperator.shift(vec[:d], vec[d:], 1.0)


def conjugation_phase(z: np.ndarray, lam: np.ndarray, d: int) -> np.ndarray:
    """Phase p with U_z^* U_lam U_z = p U_lam, vectorised over rows of ``z``.

    p = exp(i(<t_z, w_lam> - <t_lam, w_z>)); :func:`compose` is the reference.
    """
    z = np.atleast_2d(z)
    return np.exp(1j * (z[:, :d] @ lam[d:] - z[:, d:] @ lam[:d]))


def points_array(points: Sequence, d: int) -> np.ndarray:
    return np.array([_as_point(p, d) for p in points]).reshape(-1, 2 * d)
