"""Array geometry, scenario description and deterministic covariance models."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

__all__ = [
    "ArrayGeometry",
    "Scenario",
    "HermitianMatrix",
    "steering_vector",
    "steering_derivative",
    "exp_toeplitz_cov",
    "exp_toeplitz_cov_drho",
    "half_power_beamwidth",
    "snr_to_power",
]

_HERMITIAN_TOL = 1e-12


class HermitianMatrix:
    """Complex Hermitian positive-definite matrix with a cached Cholesky factor.

    Hermitian symmetry is checked at construction (tolerance 1e-12 relative to
    the largest entry); positive definiteness is established lazily, the first
    time the Cholesky factor is requested.
    """

    __slots__ = ("entries", "_chol")

    def __init__(self, entries):
        entries = np.array(entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("HermitianMatrix requires a square matrix")
        scale = max(1.0, float(np.abs(entries).max()))
        if np.abs(entries - entries.conj().T).max() > _HERMITIAN_TOL * scale:
            raise ValueError("matrix is not Hermitian to 1e-12")
        # exact symmetrization so quadratic forms come out real
        self.entries = 0.5 * (entries + entries.conj().T)
        self._chol = None

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor L with L L^H = R; raises if not PD."""
        if self._chol is None:
            try:
                self._chol = np.linalg.cholesky(self.entries)
            except np.linalg.LinAlgError as exc:
                raise ValueError("matrix is not positive definite") from exc
        return self._chol

    def solve(self, b: np.ndarray) -> np.ndarray:
        """R^{-1} b via the cached factorization."""
        return sla.cho_solve((self.cholesky, True), np.asarray(b, dtype=np.complex128))

    def whiten(self, b: np.ndarray) -> np.ndarray:
        """L^{-1} b, so that whiten(x)^H whiten(y) = x^H R^{-1} y."""
        return sla.solve_triangular(self.cholesky, np.asarray(b, dtype=np.complex128), lower=True)

    def inv_quadratic(self, v: np.ndarray) -> float:
        """Real part of v^H R^{-1} v (exactly real for Hermitian PD R)."""
        w = self.whiten(v)
        return float(np.real(np.vdot(w, w)))


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: ``m`` sensors, spacing in wavelengths."""

    m: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("ArrayGeometry requires m >= 2")
        if not (self.spacing > 0.0):
            raise ValueError("ArrayGeometry requires spacing > 0")


@dataclass(frozen=True)
class Scenario:
    """Full experiment description.

    ``beta`` defaults to 1/nu so the texture has unit mean power.  Angles are
    radians everywhere inside the library; degrees only exist at the CLI/
    service boundary.
    """

    geometry: ArrayGeometry
    phi0: float
    rho: float
    snr_db: float
    nu: float
    t_p: int
    t_s: int
    beta: float | None = None
    eta: float = 0.01
    mixture_alpha: float = 0.0

    def __post_init__(self):
        if not abs(self.phi0) < math.pi / 2:
            raise ValueError("phi0 must satisfy |phi0| < pi/2")
        if not abs(self.rho) < 1.0:
            raise ValueError("rho must satisfy |rho| < 1")
        if not self.nu > 0.0:
            raise ValueError("nu must be > 0")
        if self.beta is None:
            object.__setattr__(self, "beta", 1.0 / self.nu)
        if not self.beta > 0.0:
            raise ValueError("beta must be > 0")
        if self.t_p < 1:
            raise ValueError("t_p must be >= 1")
        if self.t_s < 0:
            raise ValueError("t_s must be >= 0")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must be in (0, 1)")
        if not 0.0 <= self.mixture_alpha <= 1.0:
            raise ValueError("mixture_alpha must be in [0, 1]")

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    def speckle_covariance(self) -> HermitianMatrix:
        """Exponential-Toeplitz scatter matrix of the K component."""
        return exp_toeplitz_cov(self.geometry.m, self.rho)

    def noise_covariance(self) -> HermitianMatrix:
        """Covariance of the total noise, (1-alpha) R + alpha I for the mixture."""
        r = self.speckle_covariance().entries
        a = self.mixture_alpha
        if a == 0.0:
            return HermitianMatrix(r)
        return HermitianMatrix((1.0 - a) * r + a * np.eye(self.geometry.m))

    def search_interval(self) -> tuple[float, float]:
        """DoA search interval phi0 +/- 2 half-power beamwidths."""
        bw = half_power_beamwidth(self.geometry)
        return (self.phi0 - 2.0 * bw, self.phi0 + 2.0 * bw)

    def with_axis(self, axis: str, value) -> "Scenario":
        """Copy with one sweep axis replaced (t_p, t_s, nu or mixture_alpha)."""
        if axis == "t_p":
            return replace(self, t_p=int(value))
        if axis == "t_s":
            return replace(self, t_s=int(value))
        if axis == "nu":
            # sweeping nu re-derives beta = 1/nu (unit texture power)
            return replace(self, nu=float(value), beta=None)
        if axis == "mixture_alpha":
            return replace(self, mixture_alpha=float(value))
        raise ValueError(f"unknown sweep axis {axis!r}")


def steering_vector(geometry: ArrayGeometry, phi) -> np.ndarray:
    """ULA steering vector a(phi), a_m = exp(i 2 pi d m sin phi), ||a||^2 = M.

    ``phi`` may be a scalar (returns shape (M,)) or an array of G angles
    (returns shape (M, G)).
    """
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(np.abs(phi_arr) >= math.pi / 2):
        raise ValueError("steering_vector requires |phi| < pi/2")
    m_idx = np.arange(geometry.m)
    phase = 2.0 * math.pi * geometry.spacing * np.multiply.outer(m_idx, np.sin(phi_arr))
    a = np.exp(1j * phase)
    return a


def steering_derivative(geometry: ArrayGeometry, phi) -> np.ndarray:
    """Element-wise derivative of the steering vector in phi."""
    phi_arr = np.asarray(phi, dtype=float)
    m_idx = np.arange(geometry.m)
    a = steering_vector(geometry, phi)
    factor = 1j * 2.0 * math.pi * geometry.spacing * np.multiply.outer(m_idx, np.cos(phi_arr))
    return factor * a


def exp_toeplitz_cov(m: int, rho: float) -> HermitianMatrix:
    """Exponential-Toeplitz covariance R(k, l) = rho^|k-l|; PD for |rho| < 1."""
    if not abs(rho) < 1.0:
        raise ValueError("exp_toeplitz_cov requires |rho| < 1")
    col = rho ** np.arange(m, dtype=float)
    return HermitianMatrix(sla.toeplitz(col))


def exp_toeplitz_cov_drho(m: int, rho: float) -> np.ndarray:
    """Entry-wise derivative of the exponential-Toeplitz covariance in rho.

    Entry (k, l) is |k-l| rho^{|k-l|-1}; the diagonal is zero.  Not positive
    definite in general.
    """
    lag = np.abs(np.subtract.outer(np.arange(m), np.arange(m))).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(lag == 0.0, 0.0, lag * float(rho) ** (lag - 1.0))
    return d


def half_power_beamwidth(geometry: ArrayGeometry) -> float:
    """Broadside half-power beamwidth, 0.886 / (M d) radians (d in wavelengths)."""
    return 0.886 / (geometry.m * geometry.spacing)


def snr_to_power(snr_linear: float, r: HermitianMatrix, a: np.ndarray) -> float:
    """Waveform power P such that P * (a^H R^{-1} a) equals the target SNR."""
    if not snr_linear > 0.0:
        raise ValueError("snr_to_power requires snr_linear > 0")
    gain = r.inv_quadratic(a)
    return snr_linear / gain
