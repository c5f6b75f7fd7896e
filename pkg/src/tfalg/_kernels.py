"""Hot inner loops, numba-compiled when available.

Set ``TFALG_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
Both paths are kept importable (``*_numpy`` / ``*_numba``) so tests and the
benchmark can compare them directly.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

USE_NUMBA = numba is not None and os.environ.get("TFALG_DISABLE_NUMBA", "") not in ("1", "true", "yes")


# --- twisted products -------------------------------------------------------

def twisted_products_numpy(pa, ca, pb, cb, d):
    """All pairwise products c_i d_j e^{-i<t_i, w_j>} at points p_i + q_j.

    Row ``i * nb + j`` of the output holds the (i, j) product.
    """
    na, nb = pa.shape[0], pb.shape[0]
    pts = (pa[:, None, :] + pb[None, :, :]).reshape(na * nb, 2 * d)
    phase = pa[:, :d] @ pb[:, d:].T
    coeffs = (ca[:, None] * cb[None, :]) * np.exp(-1j * phase)
    return pts, coeffs.reshape(na * nb)


def _twisted_products_loop(pa, ca, pb, cb, d):
    na, nb = pa.shape[0], pb.shape[0]
    pts = np.empty((na * nb, 2 * d))
    coeffs = np.empty(na * nb, dtype=np.complex128)
    for i in range(na):
        for j in range(nb):
            k = i * nb + j
            ph = 0.0
            for a in range(d):
                ph += pa[i, a] * pb[j, d + a]
            for a in range(2 * d):
                pts[k, a] = pa[i, a] + pb[j, a]
            coeffs[k] = ca[i] * cb[j] * complex(np.cos(ph), -np.sin(ph))
    return pts, coeffs


# --- compensated segment sums ----------------------------------------------

def segment_sums_numpy(re, im, starts):
    """Neumaier-compensated sums of ``re + 1j*im`` over ``[starts[k], starts[k+1])``."""
    import math

    n = re.shape[0]
    bounds = np.append(starts, n)
    out = np.empty(starts.shape[0], dtype=np.complex128)
    sizes = np.diff(bounds)
    single = sizes == 1
    out[single] = re[starts[single]] + 1j * im[starts[single]]
    for k in np.flatnonzero(~single):
        lo, hi = bounds[k], bounds[k + 1]
        out[k] = complex(math.fsum(re[lo:hi]), math.fsum(im[lo:hi]))
    return out


def _segment_sums_loop(re, im, starts):
    n = re.shape[0]
    m = starts.shape[0]
    out = np.empty(m, dtype=np.complex128)
    for k in range(m):
        lo = starts[k]
        hi = starts[k + 1] if k + 1 < m else n
        sr = 0.0
        cr = 0.0
        si = 0.0
        ci = 0.0
        for j in range(lo, hi):
            x = re[j]
            t = sr + x
            if abs(sr) >= abs(x):
                cr += (sr - t) + x
            else:
                cr += (x - t) + sr
            sr = t
            y = im[j]
            u = si + y
            if abs(si) >= abs(y):
                ci += (si - u) + y
            else:
                ci += (y - u) + si
            si = u
        out[k] = complex(sr + cr, si + ci)
    return out


# --- indicator convolution (window construction) -----------------------------

def _convolve_full_loop(a, b):
    na, nb = a.shape[0], b.shape[0]
    out = np.zeros(na + nb - 1)
    for i in range(na):
        ai = a[i]
        if ai == 0.0:
            continue
        for j in range(nb):
            out[i + j] += ai * b[j]
    return out


def convolve_full_numpy(a, b):
    return np.convolve(a, b, mode="full")


if numba is not None:
    twisted_products_numba = numba.njit(cache=True)(_twisted_products_loop)
    segment_sums_numba = numba.njit(cache=True)(_segment_sums_loop)
    convolve_full_numba = numba.njit(cache=True)(_convolve_full_loop)
else:  # pragma: no cover
    twisted_products_numba = None
    segment_sums_numba = None
    convolve_full_numba = None


if USE_NUMBA:
    twisted_products = twisted_products_numba
    segment_sums = segment_sums_numba
    convolve_full = convolve_full_numba
else:
    twisted_products = twisted_products_numpy
    segment_sums = segment_sums_numpy
    convolve_full = convolve_full_numpy
