"""Secondary-data covariance estimation by fixed-point iteration.

Three schemes: the exact K maximum-likelihood fixed point (Bessel-ratio
weights), the Tyler-like approximate ML fixed point, and the regularized
fixed point on norm-normalized data that stays usable for T_s < M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array_model import HermitianMatrix
from .fim_crb import score_phi

__all__ = ["FixedPointResult", "cov_ml_k", "cov_tyler_aml", "cov_racg"]


@dataclass
class FixedPointResult:
    r_hat: HermitianMatrix
    iterations: int
    final_delta: float
    converged: bool


def _quadratic_forms(r: HermitianMatrix, y: np.ndarray) -> np.ndarray:
    """q_t = y_t^H R^{-1} y_t for every column of y."""
    w = r.whiten(y)
    return np.sum(np.abs(w) ** 2, axis=0).real


def _check_secondary(y: np.ndarray, require_full_rank: bool) -> np.ndarray:
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 2:
        raise ValueError("secondary data must be an M x T_s matrix")
    m, t_s = y.shape
    if require_full_rank:
        if t_s < m:
            raise ValueError(f"fixed point requires T_s >= M (got T_s={t_s}, M={m})")
        if np.linalg.matrix_rank(y) < m:
            raise ValueError("secondary data is rank deficient")
    return y


def _iterate(y: np.ndarray, step, tol: float, max_iter: int) -> FixedPointResult:
    m = y.shape[0]
    r = np.eye(m, dtype=np.complex128)
    delta = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        r_new = step(HermitianMatrix(r))
        r_new = 0.5 * (r_new + r_new.conj().T)
        delta = float(
            np.linalg.norm(r_new - r, "fro") / np.linalg.norm(r, "fro")
        )
        r = r_new
        if delta < tol:
            return FixedPointResult(HermitianMatrix(r), iterations, delta, True)
    return FixedPointResult(HermitianMatrix(r), iterations, delta, False)


def cov_ml_k(y, nu: float, beta: float, tol: float = 1e-8,
             max_iter: int = 200) -> FixedPointResult:
    """Exact K-ML covariance fixed point (up to scale).

    Iterates R <- (1/T_s) sum_t phi(q_t) y_t y_t^H with q_t = y_t^H R^{-1} y_t
    and phi the K score function.  The fixed point is defined up to a positive
    scale; downstream DoA objectives are invariant to that scale.
    """
    y = _check_secondary(y, require_full_rank=True)
    m, t_s = y.shape

    def step(r: HermitianMatrix) -> np.ndarray:
        q = _quadratic_forms(r, y)
        w = score_phi(q, nu, beta, m)
        return (y * w) @ y.conj().T / t_s

    return _iterate(y, step, tol, max_iter)


def cov_tyler_aml(y, nu: float, tol: float = 1e-8,
                  max_iter: int = 200) -> FixedPointResult:
    """Tyler-like fixed point with the large M - nu weight.

    R <- c_nu / T_s sum_t y_t y_t^H / (y_t^H R^{-1} y_t), with
    c_nu = sqrt((M+1-nu)(M-nu)).  Exactly scale invariant in the data.
    """
    y = _check_secondary(y, require_full_rank=True)
    m, t_s = y.shape
    norms = np.sum(np.abs(y) ** 2, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("secondary data contains a zero snapshot")
    c_nu = math.sqrt((m + 1.0 - nu) * (m - nu))

    def step(r: HermitianMatrix) -> np.ndarray:
        q = _quadratic_forms(r, y)
        return c_nu / t_s * (y / q) @ y.conj().T

    return _iterate(y, step, tol, max_iter)


def cov_racg(y, eta: float, tol: float = 1e-8,
             max_iter: int = 200) -> FixedPointResult:
    """Regularized fixed point on norm-normalized data, trace-normalized to M.

    R_breve <- (1-eta) (M/T_s) sum_t z_t z_t^H / (z_t^H R_hat^{-1} z_t) + eta I
    with z_t = y_t / ||y_t||, followed by R_hat = M R_breve / tr(R_breve).
    Valid for any T_s >= 1 (including T_s < M) and distribution-free in the
    texture.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("cov_racg requires 0 < eta < 1")
    y = _check_secondary(y, require_full_rank=False)
    m, t_s = y.shape
    if t_s < 1:
        raise ValueError("cov_racg requires at least one snapshot")
    norms = np.sqrt(np.sum(np.abs(y) ** 2, axis=0))
    if np.any(norms == 0.0):
        raise ValueError("secondary data contains a zero snapshot")
    z = y / norms

    def step(r: HermitianMatrix) -> np.ndarray:
        q = _quadratic_forms(r, z)
        breve = (1.0 - eta) * (m / t_s) * (z / q) @ z.conj().T + eta * np.eye(m)
        return m / np.trace(breve).real * breve

    return _iterate(z, step, tol, max_iter)
