"""Point-wise Wigner evaluation kernels (numba-compiled with numpy fallback).

The Wigner function is computed from the displaced-parity form
W = (1/pi) Tr[rho D(a) P D(a)^+] = (1/pi) Tr[rho D(2a) P], whose Fock matrix
elements reduce to generalized Laguerre polynomials.  Two implementations are
provided: a numba kernel that loops over grid points in parallel, and a
vectorized numpy/scipy path.  Set PULSEMPS_NO_NUMBA=1 to force the fallback;
it is also used automatically when numba is unavailable.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy.special import eval_genlaguerre

try:
    import numba
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _HAVE_NUMBA = False


def use_numba():
    return _HAVE_NUMBA and os.environ.get("PULSEMPS_NO_NUMBA", "") != "1"


def _log_factorials(d):
    return np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, d))]))


def wigner_points_numpy(rho, alphas):
    """W at complex phase-space points; rho is a Hermitian Fock matrix."""
    d = rho.shape[0]
    beta = 2.0 * np.asarray(alphas, dtype=complex).ravel()
    x = np.abs(beta) ** 2
    gauss = np.exp(-x / 2)
    logfact = _log_factorials(d)
    out = np.zeros(beta.shape, dtype=float)
    # diagonals of the displacement matrix, k = m - n >= 0
    for k in range(d):
        bk = beta ** k
        for n in range(d - k):
            m = n + k
            coeff = math.exp((logfact[n] - logfact[m]) / 2) * (-1) ** n
            lag = eval_genlaguerre(n, k, x)
            term = rho[n, m] * coeff * bk * lag
            out += (1.0 if k == 0 else 2.0) * np.real(term)
    return out * gauss / math.pi


if _HAVE_NUMBA:

    @numba.njit(parallel=True, cache=True)
    def _wigner_kernel(rho_re, rho_im, beta_re, beta_im, sqrt_fact_ratio, out):
        d = rho_re.shape[0]
        npts = beta_re.shape[0]
        for p in numba.prange(npts):
            br = beta_re[p]
            bi = beta_im[p]
            x = br * br + bi * bi
            acc = 0.0
            # Laguerre recurrence in n for every diagonal k = m - n
            for k in range(d):
                # beta**k
                pr, pi = 1.0, 0.0
                for _ in range(k):
                    pr, pi = pr * br - pi * bi, pr * bi + pi * br
                lag_prev = 0.0
                lag = 1.0
                sign = 1.0
                for n in range(d - k):
                    if n >= 1:
                        lag_new = ((2 * n - 1 + k - x) * lag
                                   - (n - 1 + k) * lag_prev) / n
                        lag_prev = lag
                        lag = lag_new
                    m = n + k
                    coeff = sqrt_fact_ratio[n, m] * sign
                    re = rho_re[n, m] * pr - rho_im[n, m] * pi
                    acc += (1.0 if k == 0 else 2.0) * coeff * lag * re
                    sign = -sign
            out[p] = acc * math.exp(-x / 2) / math.pi

    def wigner_points_numba(rho, alphas):
        d = rho.shape[0]
        beta = 2.0 * np.asarray(alphas, dtype=complex).ravel()
        logfact = _log_factorials(d)
        ratio = np.exp((logfact[:, None] - logfact[None, :]) / 2)
        out = np.empty(beta.shape[0])
        _wigner_kernel(np.ascontiguousarray(rho.real),
                       np.ascontiguousarray(rho.imag),
                       np.ascontiguousarray(beta.real),
                       np.ascontiguousarray(beta.imag), ratio, out)
        return out

else:  # pragma: no cover - depends on environment

    def wigner_points_numba(rho, alphas):
        raise RuntimeError("numba is not available")


def wigner_points(rho, alphas):
    """Dispatch to the compiled kernel or the numpy fallback."""
    if use_numba():
        return wigner_points_numba(rho, alphas)
    return wigner_points_numpy(rho, alphas)
