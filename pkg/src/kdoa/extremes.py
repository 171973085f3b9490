"""Extreme-value statistics of the minimum texture and non-regular MSE bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specfun import log_gamma, reg_lower_inc_gamma

__all__ = [
    "RateBound",
    "cdf_min_texture",
    "limiting_cdf_v",
    "c_constant",
    "mse_rate_bounds",
]


@dataclass(frozen=True)
class RateBound:
    """MSE sandwich at one primary sample count, lower = upper / T_p."""

    t_p: int
    lower: float
    upper: float
    crb_g: float
    nu: float
    beta: float


def cdf_min_texture(eta_val, nu: float, beta: float, t_p: int):
    """CDF of the minimum of T_p i.i.d. Gamma(nu, beta) textures.

    Pr{min tau <= eta} = 1 - [1 - P(nu, eta / beta)]^{T_p} with P the
    regularized lower incomplete gamma.
    """
    if t_p < 1:
        raise ValueError("cdf_min_texture requires t_p >= 1")
    eta_arr = np.asarray(eta_val, dtype=float)
    if eta_arr.size and np.any(eta_arr < 0.0):
        raise ValueError("cdf_min_texture requires eta_val >= 0")
    p = np.asarray(reg_lower_inc_gamma(nu, eta_arr / beta))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.expm1(t_p * np.log1p(-np.minimum(p, 1.0)))
    out = np.where(p >= 1.0, 1.0, out)
    if np.isscalar(eta_val) or eta_arr.ndim == 0:
        return float(out)
    return out


def limiting_cdf_v(x, nu: float, beta: float):
    """Limiting CDF of v = T^{1/nu} min-texture as T -> infinity.

    1 - exp(-beta^{-nu} x^nu / (nu Gamma(nu))): a Weibull-type law with shape
    nu.
    """
    if not (nu > 0.0 and beta > 0.0):
        raise ValueError("limiting_cdf_v requires nu > 0 and beta > 0")
    x_arr = np.asarray(x, dtype=float)
    if x_arr.size and np.any(x_arr < 0.0):
        raise ValueError("limiting_cdf_v requires x >= 0")
    log_rate = -nu * math.log(beta) - math.log(nu) - log_gamma(nu)
    with np.errstate(divide="ignore"):
        exponent = np.where(x_arr > 0.0, np.exp(log_rate + nu * np.log(x_arr)), 0.0)
    out = -np.expm1(-exponent)
    if np.isscalar(x) or x_arr.ndim == 0:
        return float(out)
    return out


def c_constant(nu: float, beta: float) -> float:
    """Asymptotic mean of T^{1/nu} min-texture:

    C(nu, beta) = beta nu^{1/nu - 1} Gamma(nu)^{1/nu} Gamma(1/nu).
    """
    if not (nu > 0.0 and beta > 0.0):
        raise ValueError("c_constant requires nu > 0 and beta > 0")
    return float(
        beta
        * math.exp(
            (1.0 / nu - 1.0) * math.log(nu)
            + log_gamma(nu) / nu
            + log_gamma(1.0 / nu)
        )
    )


def mse_rate_bounds(t_p: int, nu: float, beta: float, crb_g: float) -> RateBound:
    """Sandwich bounds on the non-regular (nu < 1) DoA MSE at T_p snapshots.

        lower = crb_g C(nu, beta) T_p^{-1/nu}
        upper = crb_g C(nu, beta) T_p^{-1/nu + 1}

    ``crb_g`` is the Gaussian conditional CRB for the same scenario and T_p.
    Raises in the regular regime nu >= 1, where the CRB itself applies.
    """
    if not 0.0 < nu < 1.0:
        raise ValueError("mse_rate_bounds requires 0 < nu < 1 (non-regular regime)")
    if not crb_g > 0.0:
        raise ValueError("mse_rate_bounds requires crb_g > 0")
    if t_p < 1:
        raise ValueError("mse_rate_bounds requires t_p >= 1")
    c = c_constant(nu, beta)
    upper = crb_g * c * float(t_p) ** (-1.0 / nu + 1.0)
    lower = upper / float(t_p)
    return RateBound(t_p=int(t_p), lower=lower, upper=upper, crb_g=float(crb_g),
                     nu=float(nu), beta=float(beta))
