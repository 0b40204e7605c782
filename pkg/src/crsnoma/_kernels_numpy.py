"""Pure-numpy contour kernels (fallback path when numba is disabled/unavailable).

The hot operations are products of complex log-gammas evaluated on vertical
contours: a single contour for the univariate Mellin-Barnes integral and a
tensor grid for the bivariate one.  The numpy path vectorises over the
contour; the bivariate grid is processed in row chunks so memory stays
bounded.
"""

from __future__ import annotations

import numpy as np

# Lanczos series, g = 5.2421875 in the (z + 0.5)*log(z + g) - (z + g)
# parameterisation.  Relative error is at machine level for Re z >= 0.5;
# the reflection below extends that to the rest of the plane.
_LANCZOS_G = 5.24218750000000000
_LANCZOS_C0 = 0.999999999999997092
_LANCZOS_C = np.array([
    57.1562356658629235, -59.5979603554754912, 14.1360979747417471,
    -0.491913816097620199, 0.339946499848118887e-4, 0.465236289270485756e-4,
    -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
    0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
    -0.261908384015814087e-4, 0.368991826595316234e-5,
])
_SQRT_2PI = 2.5066282746310005
_LOG_PI = 1.1447298858494002
_PI = np.pi


def _lgamma_right(z):
    """Lanczos log-gamma, valid for Re z >= 0.5 (arrays ok)."""
    tmp = z + _LANCZOS_G
    tmp = (z + 0.5) * np.log(tmp) - tmp
    ser = np.full_like(z, _LANCZOS_C0)
    y = z
    for c in _LANCZOS_C:
        y = y + 1.0
        ser = ser + c / y
    return tmp + np.log(_SQRT_2PI * ser) - np.log(z)


def _log_sin_pi(z):
    """log(sin(pi z)), continuous off the real axis and overflow-safe.

    sin(pi z) = (i/2) e^{-i pi z} (1 - e^{2 i pi z}) keeps every exponent
    bounded in the upper half-plane; the lower half-plane is its conjugate.
    """
    upper = np.imag(z) >= 0
    zu = np.where(upper, z, np.conj(z))
    v = np.log(1.0 - np.exp(2j * _PI * zu)) - 1j * _PI * zu + np.log(0.5j)
    return np.where(upper, v, np.conj(v))


def lgamma_cplx(z):
    """Principal-branch complex log-gamma, vectorised."""
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    right = z.real >= 0.5
    if np.any(right):
        out[right] = _lgamma_right(z[right])
    if not np.all(right):
        zl = z[~right]
        out[~right] = _LOG_PI - _log_sin_pi(zl) - _lgamma_right(1.0 - zl)
    return out[0] if scalar else out


def gamma_product_log(c0, w, sgn, s):
    """sum_k sgn_k * lgamma(c0_k + w_k * s) for an array of contour points s."""
    lg = np.zeros_like(s)
    for k in range(len(c0)):
        term = lgamma_cplx(c0[k] + w[k] * s)
        lg = lg + term if sgn[k] > 0 else lg - term
    return lg


def g_contour_total(c0, w, sgn, c, lnz, h, n):
    """Trapezoid sum of the univariate contour integrand over Re s = c.

    Uses the conjugate symmetry of the integrand (real parameters, z > 0):
    only Im s >= 0 is evaluated.  Returns the real value of the integral
    including the 1/(2 pi) normalisation.
    """
    t = np.arange(0, n + 1) * h
    s = c + 1j * t
    f = np.exp(gamma_product_log(c0, w, sgn, s) + s * lnz)
    wgt = np.full(n + 1, 2.0)
    wgt[0] = 1.0
    wgt[n] *= 0.5
    return float(np.sum(wgt * f.real) * h / (2.0 * _PI))


def h_grid_build(onum_c0, onum_wx, onum_wy, oden_c0, oden_wx, oden_wy,
                 cs, ct, h, ns, nt):
    """Dense grid of the coupling gamma factor, rows jt = 0..nt, cols js = -ns..ns."""
    s = cs + 1j * (np.arange(-ns, ns + 1) * h)
    t = ct + 1j * (np.arange(0, nt + 1) * h)
    lg = np.zeros((nt + 1, 2 * ns + 1), dtype=np.complex128)
    for k in range(len(onum_c0)):
        lg += lgamma_cplx(onum_c0[k] + onum_wx[k] * s[None, :] + onum_wy[k] * t[:, None])
    for k in range(len(oden_c0)):
        lg -= lgamma_cplx(oden_c0[k] + oden_wx[k] * s[None, :] + oden_wy[k] * t[:, None])
    return np.exp(lg)


def h_grid_apply(grid, U, Vh, h):
    """Contract a prebuilt coupling grid with per-pair contour vectors.

    U: (2*ns+1, B) weighted inner-x integrand columns; Vh: (nt+1, B) inner-y
    columns for Im t >= 0.  Row jt > 0 counts twice (conjugate symmetry).
    """
    nt = Vh.shape[0] - 1
    M = grid @ U                      # (nt+1, B)
    wrow = np.full((nt + 1, 1), 2.0)
    wrow[0, 0] = 1.0
    wrow[nt, 0] *= 0.5
    vals = np.sum(wrow * np.real(M * Vh), axis=0)
    return vals * (h / (2.0 * _PI)) ** 2


def h_contour_total_batch(onum_c0, onum_wx, onum_wy, oden_c0, oden_wx, oden_wy,
                          cs, ct, h, ns, nt, U, Vh, chunk=192):
    """Fused build+apply in row chunks (no grid materialisation)."""
    s = cs + 1j * (np.arange(-ns, ns + 1) * h)
    out = np.zeros(U.shape[1])
    for j0 in range(0, nt + 1, chunk):
        j1 = min(j0 + chunk, nt + 1)
        t = ct + 1j * (np.arange(j0, j1) * h)
        lg = np.zeros((j1 - j0, 2 * ns + 1), dtype=np.complex128)
        for k in range(len(onum_c0)):
            lg += lgamma_cplx(onum_c0[k] + onum_wx[k] * s[None, :] + onum_wy[k] * t[:, None])
        for k in range(len(oden_c0)):
            lg -= lgamma_cplx(oden_c0[k] + oden_wx[k] * s[None, :] + oden_wy[k] * t[:, None])
        M = np.exp(lg) @ U
        wrow = np.full((j1 - j0, 1), 2.0)
        if j0 == 0:
            wrow[0, 0] = 1.0
        if j1 == nt + 1:
            wrow[-1, 0] *= 0.5
        out += np.sum(wrow * np.real(M * Vh[j0:j1]), axis=0)
    return out * (h / (2.0 * _PI)) ** 2
