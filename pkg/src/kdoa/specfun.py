"""Log-domain special functions.

Everything downstream that touches the K-distribution likelihood goes through
``log_bessel_k`` / ``bessel_k_ratio``; the raw Bessel function is never
materialized, so the objective stays finite for orders up to a few hundred and
arguments from 1e-8 up to 1e4.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

__all__ = [
    "log_gamma",
    "reg_lower_inc_gamma",
    "log_bessel_k",
    "bessel_k_ratio",
    "ratio_bounds",
]


def _as_positive_order(a: float) -> float:
    """Fold a Bessel order onto [0, inf) using K_{-a} = K_a."""
    a = float(a)
    if not math.isfinite(a):
        raise ValueError(f"Bessel order must be finite, got {a}")
    return abs(a)


def log_gamma(x):
    """Natural log of the gamma function, ln .GAMMA.(x), for x > 0.

    Accepts scalars or arrays; raises ValueError outside the domain.
    """
    x_arr = np.asarray(x, dtype=float)
    if x_arr.size and (not np.all(np.isfinite(x_arr)) or np.any(x_arr <= 0.0)):
        raise ValueError("log_gamma requires finite x > 0")
    out = special.gammaln(x_arr)
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def reg_lower_inc_gamma(a: float, x):
    """Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).

    Monotone nondecreasing in x, P(a, 0) = 0, P(a, inf) = 1.
    """
    a = float(a)
    if not math.isfinite(a) or a <= 0.0:
        raise ValueError("reg_lower_inc_gamma requires a > 0")
    x_arr = np.asarray(x, dtype=float)
    if x_arr.size and (np.any(x_arr < 0.0) or np.any(np.isnan(x_arr))):
        raise ValueError("reg_lower_inc_gamma requires x >= 0")
    out = special.gammainc(a, x_arr)
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def _log_k_recurrence(a: float, z: np.ndarray) -> np.ndarray:
    """ln K_a(z) by log-domain forward recurrence from fractional seed orders.

    kve at order f in [0, 1] never overflows for z in the supported range, and
    K_{a+1} = (2a/z) K_a + K_{a-1} is forward-stable, so the recursion

        ln K_{a+1} = ln K_a + ln(2a/z + exp(ln K_{a-1} - ln K_a))

    reaches arbitrary (moderate) orders without leaving the log domain.
    """
    n = int(math.floor(a))
    f = a - n
    l0 = np.log(special.kve(f, z)) - z
    if n == 0:
        return l0
    l1 = np.log(special.kve(f + 1.0, z)) - z
    for j in range(1, n):
        l0, l1 = l1, l1 + np.log(2.0 * (f + j) / z + np.exp(l0 - l1))
    return l1


def log_bessel_k(a: float, z):
    """ln K_a(z), the log modified Bessel function of the second kind.

    Stable over order |a| up to ~200 and z in [1e-8, 1e4]: the exponentially
    scaled ``kve`` covers the bulk of the domain and a log-domain forward
    recurrence takes over where K_a(z) itself would overflow (large order,
    small argument). Negative orders are folded by the K_{-a} = K_a symmetry.

    Parameters
    ----------
    a : float
        Order (any finite real; sign is irrelevant).
    z : float or ndarray
        Argument, strictly positive.
    """
    a = _as_positive_order(a)
    scalar = np.isscalar(z) or np.ndim(z) == 0
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if z_arr.size and (np.any(~np.isfinite(z_arr)) or np.any(z_arr <= 0.0)):
        raise ValueError("log_bessel_k requires z > 0")
    with np.errstate(over="ignore", divide="ignore"):
        out = np.log(special.kve(a, z_arr)) - z_arr
    bad = ~np.isfinite(out)
    if np.any(bad):
        out[bad] = _log_k_recurrence(a, z_arr[bad])
    return float(out[0]) if scalar else out


def bessel_k_ratio(a: float, z):
    """K_{a+1}(z) / K_a(z), computed as a log difference (cancellation-free).

    Always > 1 for a >= 0; decreasing in z; ~ 2(a)/z as z -> 0 for a > 0.
    """
    a = _as_positive_order(a)
    scalar = np.isscalar(z) or np.ndim(z) == 0
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if z_arr.size and (np.any(~np.isfinite(z_arr)) or np.any(z_arr <= 0.0)):
        raise ValueError("bessel_k_ratio requires z > 0")
    with np.errstate(over="ignore", divide="ignore"):
        num = special.kve(a + 1.0, z_arr)
        den = special.kve(a, z_arr)
        out = num / den
        bad = ~np.isfinite(out)
    if np.any(bad):
        zb = z_arr[bad]
        out[bad] = np.exp(_log_k_recurrence(a + 1.0, zb) - _log_k_recurrence(a, zb))
    return float(out[0]) if scalar else out


def ratio_bounds(a: float, z):
    """Closed-form bracket (lower, upper) for K_{a+1}(z) / K_a(z), a >= 1.

        lower = sqrt(a / (a+1)) + a / z
        upper = 2 (a+1) / z + 1

    The bracket is strict for all z > 0.
    """
    a = _as_positive_order(a)
    if a < 1.0:
        raise ValueError("ratio_bounds requires order a >= 1")
    scalar = np.isscalar(z) or np.ndim(z) == 0
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if z_arr.size and (np.any(~np.isfinite(z_arr)) or np.any(z_arr <= 0.0)):
        raise ValueError("ratio_bounds requires z > 0")
    lower = math.sqrt(a / (a + 1.0)) + a / z_arr
    upper = 2.0 * (a + 1.0) / z_arr + 1.0
    if scalar:
        return float(lower[0]), float(upper[0])
    return lower, upper
