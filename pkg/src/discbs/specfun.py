"""Standard normal density, distribution and quantile functions.

The distribution functions go through the complementary error function,
Phi(x) = erfc(-x / sqrt(2)) / 2.  The scaled argument x / sqrt(2) is carried
in double-double precision and its rounding error is folded back with a
first-order correction, which keeps the upper tail accurate to a few ulps up
to x ~ 37 where erfc underflows.  Beyond that the log-scale functions
(``log_ndtr``) take over.

All public functions broadcast over arrays and return a numpy scalar for
scalar input.
"""

import numpy as np
from scipy import special

from .errors import DomainError

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_INV_SQRT2_HI = 0.7071067811865476
_INV_SQRT2_LO = -4.833646656726457e-17
_TWO_OVER_SQRT_PI = 1.1283791670955126
_SPLIT = 134217729.0  # 2**27 + 1


def _two_prod_err(a, b):
    """Exact rounding error of a * b (Dekker)."""
    p = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _ccdf(x):
    """Unchecked 1 - Phi(x) for float arrays."""
    x = np.asarray(x, dtype=float)
    y = x * _INV_SQRT2_HI
    small = np.abs(x) < 40.0  # beyond, exp(-y^2) is 0 and the split may overflow
    xs = np.where(small, x, 0.0)
    dy = _two_prod_err(xs, _INV_SQRT2_HI) + xs * _INV_SQRT2_LO
    ys = xs * _INV_SQRT2_HI
    corr = np.where(small, dy * _TWO_OVER_SQRT_PI * np.exp(-ys * ys), 0.0)
    return 0.5 * (special.erfc(y) - corr)


def _cdf(x):
    return _ccdf(-np.asarray(x, dtype=float))


def _check_not_nan(x, name="x"):
    x = np.asarray(x, dtype=float)
    if np.isnan(x).any():
        raise DomainError(f"{name} must not be NaN")
    return x


def _out(v):
    return v[()] if isinstance(v, np.ndarray) and v.ndim == 0 else v


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    if not np.isfinite(x).all():
        raise DomainError("std_normal_pdf requires finite input")
    return _out(np.exp(-0.5 * x * x - _LOG_SQRT_2PI))


def std_normal_logpdf(x):
    """log phi(x); accepts +-inf (returns -inf there)."""
    x = _check_not_nan(x)
    return _out(-0.5 * x * x - _LOG_SQRT_2PI)


def std_normal_cdf(x):
    """Phi(x), with Phi(-inf) = 0 and Phi(inf) = 1."""
    return _out(_cdf(_check_not_nan(x)))


def std_normal_ccdf(x):
    """1 - Phi(x) without cancellation in the upper tail."""
    return _out(_ccdf(_check_not_nan(x)))


def std_normal_logcdf(x):
    return _out(special.log_ndtr(_check_not_nan(x)))


def std_normal_logccdf(x):
    return _out(special.log_ndtr(-_check_not_nan(x)))


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    p = _check_not_nan(p, "p")
    if ((p <= 0.0) | (p >= 1.0)).any():
        raise DomainError("std_normal_quantile requires 0 < p < 1")
    return _out(special.ndtri(p))
