"""Hot inner loops, each with a numba and a pure numpy/scipy implementation.

The numba path is used when numba imports and ``POTSIM_DISABLE_NUMBA`` is
unset (or ``0``).  Both paths are always importable so tests and the
benchmark can compare them directly.
"""

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("POTSIM_DISABLE_NUMBA", "0") in ("", "0")


# -- circular cross-correlation --------------------------------------------

def circular_xcorr_numpy(x, y, n_lags):
    """R[k] = sum_l x[l] * y[(k + l) mod L] for k in [0, n_lags)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    length = x.shape[0]
    wrapped = np.concatenate((y, y[:n_lags]))
    windows = sliding_window_view(wrapped, length)[:n_lags]
    return windows @ x


def _circular_xcorr_py(x, y, n_lags):
    length = x.shape[0]
    out = np.empty(n_lags)
    for k in range(n_lags):
        # split at the wrap point so both inner loops are branch-free
        acc = 0.0
        for l in range(length - k):
            acc += x[l] * y[k + l]
        for l in range(length - k, length):
            acc += x[l] * y[k + l - length]
        out[k] = acc
    return out


# -- exact first-order-hold recursion for one real pole ---------------------

def foh_first_order_numpy(u, a, b0, b1, x0):
    """x[0] = x0; x[n+1] = a*x[n] + b0*u[n] + b1*u[n+1]."""
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    out[0] = x0
    if u.shape[0] > 1:
        # transposed direct-form state carrying a*x[0] + b0*u[0] into the first step
        zi = np.array([a * x0 + b0 * u[0]])
        out[1:], _ = lfilter([b1, b0], [1.0, -a], u[1:], zi=zi)
    return out


def _foh_first_order_py(u, a, b0, b1, x0):
    out = np.empty(u.shape[0])
    x = x0
    out[0] = x
    for n in range(u.shape[0] - 1):
        x = a * x + b0 * u[n] + b1 * u[n + 1]
        out[n + 1] = x
    return out


# -- multi-state trapezoidal recursion --------------------------------------

def linear_recursion_numpy(A, b_sum, b_diff, v, x0):
    """x[n+1] = A x[n] + b_sum*(v[n+1] + v[n]) + b_diff*(v[n+1] - v[n])."""
    v = np.asarray(v, dtype=np.float64)
    out = np.empty((v.shape[0], x0.shape[0]))
    x = np.array(x0, dtype=np.float64)
    out[0] = x
    vs = v[1:] + v[:-1]
    vd = v[1:] - v[:-1]
    for n in range(v.shape[0] - 1):
        x = A @ x + b_sum * vs[n] + b_diff * vd[n]
        out[n + 1] = x
    return out


def _linear_recursion_py(A, b_sum, b_diff, v, x0):
    m = x0.shape[0]
    out = np.empty((v.shape[0], m))
    x = x0.copy()
    out[0] = x
    nxt = np.empty(m)
    for n in range(v.shape[0] - 1):
        vs = v[n + 1] + v[n]
        vd = v[n + 1] - v[n]
        for i in range(m):
            acc = b_sum[i] * vs + b_diff[i] * vd
            for j in range(m):
                acc += A[i, j] * x[j]
            nxt[i] = acc
        for i in range(m):
            x[i] = nxt[i]
            out[n + 1, i] = nxt[i]
    return out


if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    # reassociating the sums lets LLVM vectorize the dot products
    circular_xcorr_numba = numba.njit(cache=True, nogil=True, fastmath=True)(_circular_xcorr_py)
    foh_first_order_numba = _jit(_foh_first_order_py)
    linear_recursion_numba = _jit(_linear_recursion_py)
else:  # pragma: no cover
    circular_xcorr_numba = circular_xcorr_numpy
    foh_first_order_numba = foh_first_order_numpy
    linear_recursion_numba = linear_recursion_numpy


def circular_xcorr(x, y, n_lags):
    if USE_NUMBA:
        return circular_xcorr_numba(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(y, dtype=np.float64),
            int(n_lags),
        )
    return circular_xcorr_numpy(x, y, n_lags)


def foh_first_order(u, a, b0, b1, x0):
    if USE_NUMBA:
        return foh_first_order_numba(
            np.ascontiguousarray(u, dtype=np.float64),
            float(a), float(b0), float(b1), float(x0),
        )
    return foh_first_order_numpy(u, a, b0, b1, x0)


def linear_recursion(A, b_sum, b_diff, v, x0):
    if USE_NUMBA:
        return linear_recursion_numba(
            np.ascontiguousarray(A, dtype=np.float64),
            np.ascontiguousarray(b_sum, dtype=np.float64),
            np.ascontiguousarray(b_diff, dtype=np.float64),
            np.ascontiguousarray(v, dtype=np.float64),
            np.array(x0, dtype=np.float64),
        )
    return linear_recursion_numpy(A, b_sum, b_diff, v, x0)
