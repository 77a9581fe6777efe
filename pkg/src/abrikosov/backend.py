"""Kernel backend selection: numba-jitted loops with a pure-numpy fallback.

The hot kernels (torus Green-function batches and the projected SOR sweeps of
the obstacle solver) exist in two functionally identical implementations:

* ``*_numba`` -- explicit loops compiled with ``numba.njit(cache=True)``;
* ``*_numpy`` -- vectorized numpy.

Selection happens once at import time.  Setting the environment variable
``ABRIKOSOV_NO_NUMBA`` to ``1``/``true``/``yes`` forces the numpy path; the
numpy path is also used automatically when numba is not importable.
``ABRIKOSOV_THREADS`` caps the numba threading layer (the kernels themselves
are single-threaded and deterministic either way).
"""
from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("ABRIKOSOV_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in {"1", "true", "yes", "on"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED

if USE_NUMBA:
    _threads = os.environ.get("ABRIKOSOV_THREADS", "").strip()
    if _threads:
        try:
            numba.set_num_threads(
                max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS))
            )
        except (ValueError, RuntimeError):
            pass


# ---------------------------------------------------------------------------
# Green-function kernels.
#
# Inputs are fractional coordinates (s, t) in a reduced-modulus frame
# tau = a + i b.  With z = s + t*tau, q = exp(2 i pi tau), w = exp(i pi z),
# p = w^2, the torus Green function of the cell (volume-2pi normalization) is
#
#   G(s, t) = pi b/6 - log|w - 1/w| - sum_{n>=1} log|1-q^n p| + log|1-q^n/p|
#             + pi b t^2
#
# and its (s, t)-gradient follows from the log-derivative
#
#   L(z) = pi i (p+1)/(p-1)
#          + 2 pi i sum_{n>=1} [ (q^n/p)/(1-q^n/p) - q^n p/(1-q^n p) ],
#   dG/ds = -Re L,   dG/dt = -Re(tau L) + 2 pi b t.
#
# Both implementations wrap (s, t) into [-1/2, 1/2) first, which keeps the
# series terms bounded by |q|^(n-1/2).
# ---------------------------------------------------------------------------


def _green_values_impl(ds, dt, a, b, nterms):
    m = ds.shape[0]
    out = np.empty(m, dtype=np.float64)
    tau = complex(a, b)
    q = np.exp(2j * np.pi * tau)
    base = np.pi * b / 6.0
    for i in range(m):
        s = ds[i] - np.rint(ds[i])
        t = dt[i] - np.rint(dt[i])
        z = s + t * tau
        w = np.exp(1j * np.pi * z)
        p = w * w
        acc = base - np.log(np.abs(w - 1.0 / w)) + np.pi * b * t * t
        qn = complex(1.0, 0.0)
        for _ in range(nterms):
            qn = qn * q
            acc = acc - np.log(np.abs(1.0 - qn * p)) - np.log(np.abs(1.0 - qn / p))
        out[i] = acc
    return out


def _green_grads_impl(ds, dt, a, b, nterms):
    m = ds.shape[0]
    gs = np.empty(m, dtype=np.float64)
    gt = np.empty(m, dtype=np.float64)
    tau = complex(a, b)
    q = np.exp(2j * np.pi * tau)
    twopib = 2.0 * np.pi * b
    for i in range(m):
        s = ds[i] - np.rint(ds[i])
        t = dt[i] - np.rint(dt[i])
        z = s + t * tau
        w = np.exp(1j * np.pi * z)
        p = w * w
        lsum = np.pi * 1j * (p + 1.0) / (p - 1.0)
        qn = complex(1.0, 0.0)
        for _ in range(nterms):
            qn = qn * q
            lsum = lsum + 2j * np.pi * (
                (qn / p) / (1.0 - qn / p) - qn * p / (1.0 - qn * p)
            )
        gs[i] = -lsum.real
        gt[i] = -(tau * lsum).real + twopib * t
    return gs, gt


def green_values_numpy(ds, dt, a, b, nterms):
    tau = complex(a, b)
    q = np.exp(2j * np.pi * tau)
    s = ds - np.rint(ds)
    t = dt - np.rint(dt)
    z = s + t * tau
    w = np.exp(1j * np.pi * z)
    p = w * w
    acc = np.pi * b / 6.0 - np.log(np.abs(w - 1.0 / w)) + np.pi * b * t * t
    qn = complex(1.0, 0.0)
    for _ in range(nterms):
        qn = qn * q
        acc = acc - np.log(np.abs(1.0 - qn * p)) - np.log(np.abs(1.0 - qn / p))
    return acc


def green_grads_numpy(ds, dt, a, b, nterms):
    tau = complex(a, b)
    q = np.exp(2j * np.pi * tau)
    s = ds - np.rint(ds)
    t = dt - np.rint(dt)
    z = s + t * tau
    w = np.exp(1j * np.pi * z)
    p = w * w
    lsum = np.pi * 1j * (p + 1.0) / (p - 1.0)
    qn = complex(1.0, 0.0)
    for _ in range(nterms):
        qn = qn * q
        lsum = lsum + 2j * np.pi * ((qn / p) / (1.0 - qn / p) - qn * p / (1.0 - qn * p))
    gs = -lsum.real
    gt = -(tau * lsum).real + 2.0 * np.pi * b * t
    return gs, gt


# ---------------------------------------------------------------------------
# Projected SOR sweep over one red-black color of an irregular (masked) grid.
#
# Flat-array representation: for the k-th cell of the color, ``idx[k]`` is its
# flat index into ``values``; ``iE..iS`` are neighbor flat indices (self-index
# with zero coefficient when the neighbor carries Dirichlet data folded into
# ``bc``); ``diag`` holds the diagonal of (-Delta_h + 1); ``obstacle`` is the
# lower-bound clamp (use a huge negative number for an unconstrained solve).
# ---------------------------------------------------------------------------


def _psor_sweep_impl(values, idx, iE, iW, iN, iS, cE, cW, cN, cS, diag, bc,
                     obstacle, omega):
    for k in range(idx.shape[0]):
        i = idx[k]
        gs = (cE[k] * values[iE[k]] + cW[k] * values[iW[k]]
              + cN[k] * values[iN[k]] + cS[k] * values[iS[k]] + bc[k]) / diag[k]
        val = values[i] + omega * (gs - values[i])
        if val < obstacle:
            val = obstacle
        values[i] = val


def psor_sweep_numpy(values, idx, iE, iW, iN, iS, cE, cW, cN, cS, diag, bc,
                     obstacle, omega):
    gs = (cE * values[iE] + cW * values[iW]
          + cN * values[iN] + cS * values[iS] + bc) / diag
    val = values[idx] + omega * (gs - values[idx])
    np.maximum(val, obstacle, out=val)
    values[idx] = val


if USE_NUMBA:
    _jit = numba.njit(cache=True)
    green_values_numba = _jit(_green_values_impl)
    green_grads_numba = _jit(_green_grads_impl)
    psor_sweep_numba = _jit(_psor_sweep_impl)
    green_values = green_values_numba
    green_grads = green_grads_numba
    psor_sweep = psor_sweep_numba
    BACKEND = "numba"
else:
    green_values_numba = None
    green_grads_numba = None
    psor_sweep_numba = None
    green_values = green_values_numpy
    green_grads = green_grads_numpy
    psor_sweep = psor_sweep_numpy
    BACKEND = "numpy"


def warmup():
    """Trigger JIT compilation of all kernels on tiny inputs (no-op on numpy)."""
    ds = np.array([0.3, 0.6])
    dt = np.array([0.2, 0.7])
    green_values(ds, dt, 0.5, np.sqrt(3.0) / 2.0, 4)
    green_grads(ds, dt, 0.5, np.sqrt(3.0) / 2.0, 4)
    vals = np.zeros(9)
    one = np.arange(2, dtype=np.int64)
    cf = np.ones(2)
    psor_sweep(vals, one + 4, one, one, one, one, cf, cf, cf, cf,
               cf * 5.0, cf, -1e300, 1.5)
