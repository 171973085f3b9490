"""Fisher information for K-distributed noise: the alpha_mu scalars, block FIM
assembly, DoA Cramer-Rao bounds and the regular/non-regular diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .array_model import HermitianMatrix, Scenario, steering_derivative, steering_vector
from .sampling import sample_modular_variate
from .specfun import bessel_k_ratio, log_gamma

__all__ = [
    "ALPHA_METHODS",
    "AlphaMu",
    "RegularityRecord",
    "DivergenceTable",
    "NoiseParameterization",
    "score_phi",
    "alpha_mu",
    "moment_q",
    "i_mu_bounds",
    "regularity",
    "divergence_diagnostic",
    "fim_signal_block",
    "fim_noise_block",
    "crb_doa",
    "crb_doa_gaussian",
]

ALPHA_METHODS = ("monte_carlo", "three_term", "one_term")


@dataclass(frozen=True)
class AlphaMu:
    """The FIM scalar alpha_mu = E[Q^mu phi^2(Q)] with provenance.

    ``value`` is None when a closed-form method was requested in the divergent
    regime mu + nu - 2 <= 0 (unbounded FIM).
    """

    mu: int
    value: float | None
    method: str
    n_samples: int | None = None

    @property
    def divergent(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class RegularityRecord:
    """Boundedness classification of the two FIM blocks at a given nu."""

    nu: float
    fim_signal: str  # "bounded" | "unbounded"
    fim_noise: str  # always "bounded"


@dataclass(frozen=True)
class DivergenceTable:
    """Running Monte-Carlo means of Q^{-1} and Q phi^2(Q) at growing n."""

    sample_sizes: tuple[int, ...]
    mean_inv_q: tuple[float, ...]
    mean_q_phi2: tuple[float, ...]


@dataclass(frozen=True)
class NoiseParameterization:
    """Differentiable map theta^n -> R(theta^n) with Hermitian derivatives."""

    cov: Callable[[np.ndarray], np.ndarray]
    cov_derivs: Callable[[np.ndarray], Sequence[np.ndarray]]
    dim: int


def score_phi(q, nu: float, beta: float, m: int):
    """Score function phi(Q) = -g'(Q)/g(Q) of the K modular variate.

    Equals beta^{-1/2} Q^{-1/2} K_{M+1-nu}(2 sqrt(Q/beta)) /
    K_{M-nu}(2 sqrt(Q/beta)); strictly positive.
    """
    q_arr = np.asarray(q, dtype=float)
    if q_arr.size and np.any(q_arr <= 0.0):
        raise ValueError("score_phi requires Q > 0")
    z = 2.0 * np.sqrt(q_arr / beta)
    ratio = bessel_k_ratio(m - nu, z)
    out = ratio / np.sqrt(beta * q_arr)
    return float(out) if np.isscalar(q) or q_arr.ndim == 0 else out


def _check_order_gap(nu: float, m: int) -> None:
    gap = m - nu
    if gap < 2.0:
        raise ValueError(
            f"closed-form alpha_mu requires M - nu >= 2, got {gap:g}"
        )
    if gap < 5.0:
        warnings.warn(
            f"closed-form alpha_mu is a large M - nu approximation; M - nu = {gap:g} "
            "is small and the result may be inaccurate",
            stacklevel=3,
        )


def _alpha_three_term(mu: int, nu: float, beta: float, m: int) -> float:
    lg_norm = log_gamma(m) + log_gamma(nu)
    gap = m - nu
    t1 = gap ** 2 * math.exp(log_gamma(mu + m - 2) + log_gamma(mu + nu - 2) - lg_norm)
    t2 = 2.0 * gap * math.exp(log_gamma(mu + m - 2) + log_gamma(mu + nu - 1) - lg_norm)
    t3 = (gap * (m - 1 - nu)) ** -0.5 * math.exp(
        log_gamma(mu + m - 1) + log_gamma(mu + nu) - lg_norm
    )
    return beta ** (mu - 2) * (t1 + t2 + t3)


def _alpha_one_term(mu: int, nu: float, beta: float, m: int) -> float:
    return beta ** (mu - 2) * math.sqrt((m + 1 - nu) * (m - nu)) * math.exp(
        log_gamma(mu + m - 1) + log_gamma(mu + nu - 2) - log_gamma(m) - log_gamma(nu)
    )


def alpha_mu(
    mu: int,
    nu: float,
    beta: float,
    m: int,
    method: str = "monte_carlo",
    n_samples: int = 1_000_000,
    rng=None,
) -> AlphaMu:
    """Compute alpha_mu = E[Q^mu phi^2(Q)] for the K modular variate.

    ``method`` selects Monte-Carlo averaging over modular-variate draws or one
    of the two closed-form large M - nu approximations (three_term keeps the
    exact first two terms of the recurrence split, one_term applies the ratio
    approximation from the start).  Closed forms return the divergent marker
    (value None) when mu + nu - 2 <= 0, where the defining integral diverges.
    """
    if mu not in (1, 2):
        raise ValueError("alpha_mu is defined for mu in {1, 2}")
    if method not in ALPHA_METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {ALPHA_METHODS}")
    if not (nu > 0.0 and beta > 0.0):
        raise ValueError("alpha_mu requires nu > 0 and beta > 0")

    if method == "monte_carlo":
        gen = np.random.default_rng(rng)
        q = sample_modular_variate(nu, beta, m, n_samples, gen)
        val = float(np.mean(q ** mu * score_phi(q, nu, beta, m) ** 2))
        return AlphaMu(mu=mu, value=val, method=method, n_samples=int(n_samples))

    if mu + nu - 2.0 <= 0.0:
        return AlphaMu(mu=mu, value=None, method=method)
    _check_order_gap(nu, m)
    if method == "three_term":
        val = _alpha_three_term(mu, nu, beta, m)
    else:
        val = _alpha_one_term(mu, nu, beta, m)
    return AlphaMu(mu=mu, value=float(val), method=method)


def moment_q(mu: float, nu: float, beta: float, m: int) -> float | None:
    """E[Q^mu] = beta^mu Gamma(mu+nu) Gamma(mu+M) / (Gamma(nu) Gamma(M)).

    Returns None (divergent) unless mu + min(nu, M) > 0.
    """
    if not (nu > 0.0 and beta > 0.0):
        raise ValueError("moment_q requires nu > 0 and beta > 0")
    if mu + min(nu, float(m)) <= 0.0:
        return None
    return float(
        beta ** mu
        * math.exp(log_gamma(mu + nu) + log_gamma(mu + m) - log_gamma(nu) - log_gamma(m))
    )


def i_mu_bounds(mu: int, nu: float, m: int) -> tuple[float | None, float | None]:
    """Closed-form lower/upper bounds on the integral I_mu driving alpha_mu.

    Both bounds exist only for mu + nu - 2 > 0; otherwise (None, None) is
    returned, matching the divergence of I_mu itself.
    """
    if not nu > 0.0:
        raise ValueError("i_mu_bounds requires nu > 0")
    if mu + nu - 2.0 <= 0.0:
        return None, None
    gap = m - nu
    log2 = math.log(2.0)
    lower = math.sqrt(gap / (gap + 1.0)) * math.exp(
        (2 * mu + nu + m - 4) * log2 + log_gamma(mu + m - 0.5) + log_gamma(mu + nu - 1.5)
    ) + gap * math.exp(
        (2 * mu + nu + m - 5) * log2 + log_gamma(mu + m - 1) + log_gamma(mu + nu - 2)
    )
    upper = (gap + 1.0) * math.exp(
        (2 * mu + nu + m - 4) * log2 + log_gamma(mu + m - 1) + log_gamma(mu + nu - 2)
    ) + math.exp(
        (2 * mu + nu + m - 4) * log2 + log_gamma(mu + m - 0.5) + log_gamma(mu + nu - 1.5)
    )
    return float(lower), float(upper)


def alpha_to_i_mu(alpha: float, mu: int, nu: float, beta: float, m: int) -> float:
    """Convert an alpha_mu value back to the raw integral I_mu."""
    return float(
        alpha
        * math.exp(
            (2 * mu + nu + m - 4) * math.log(2.0) + log_gamma(m) + log_gamma(nu)
        )
        / beta ** (mu - 2)
    )


def regularity(nu: float) -> RegularityRecord:
    """Classify FIM boundedness: signal block bounded iff nu > 1 (strict)."""
    if not nu > 0.0:
        raise ValueError("regularity requires nu > 0")
    return RegularityRecord(
        nu=float(nu),
        fim_signal="bounded" if nu > 1.0 else "unbounded",
        fim_noise="bounded",
    )


def divergence_diagnostic(
    nu: float,
    beta: float,
    m: int,
    sample_sizes: Sequence[int],
    rng=None,
) -> DivergenceTable:
    """Running MC means of Q^{-1} and Q phi^2(Q) over a single growing sample.

    In the non-regular regime (nu <= 1) both running means grow without
    stabilizing; for nu > 1 they settle near E[Q^{-1}] and alpha_1.
    """
    sizes = sorted(int(n) for n in sample_sizes)
    if not sizes or sizes[0] < 1:
        raise ValueError("sample_sizes must be positive integers")
    gen = np.random.default_rng(rng)
    q = sample_modular_variate(nu, beta, m, sizes[-1], gen)
    inv_q = 1.0 / q
    q_phi2 = q * score_phi(q, nu, beta, m) ** 2
    cum_inv = np.cumsum(inv_q)
    cum_qp = np.cumsum(q_phi2)
    mean_inv = tuple(float(cum_inv[n - 1] / n) for n in sizes)
    mean_qp = tuple(float(cum_qp[n - 1] / n) for n in sizes)
    return DivergenceTable(
        sample_sizes=tuple(sizes), mean_inv_q=mean_inv, mean_q_phi2=mean_qp
    )


def _alpha_value(alpha, name: str) -> float:
    if isinstance(alpha, AlphaMu):
        if alpha.divergent:
            raise ValueError(
                f"{name} is divergent (non-regular regime, nu <= 1): the FIM is "
                "unbounded; use extremes.mse_rate_bounds instead of a CRB"
            )
        alpha = alpha.value
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise ValueError(f"{name} must be a finite positive scalar")
    return alpha


def fim_signal_block(sc: Scenario, waveforms: np.ndarray, alpha_1) -> np.ndarray:
    """Signal-parameter FIM over (phi, Re s_1..T, Im s_1..T).

    (2 alpha_1 / M) sum_t Re{ dm_t^H R^{-1} dm_t } with m_t = a(phi0) s_t.
    With the Gaussian value alpha_1 = M this reduces to the classical
    conditional-model FIM.
    """
    a1 = _alpha_value(alpha_1, "alpha_1")
    s = np.asarray(waveforms, dtype=np.complex128).ravel()
    t_p = s.size
    geom = sc.geometry
    r = sc.noise_covariance()
    a = steering_vector(geom, sc.phi0)
    da = steering_derivative(geom, sc.phi0)
    wa = r.whiten(a)
    wda = r.whiten(da)
    g_aa = float(np.real(np.vdot(wa, wa)))
    g_dd = float(np.real(np.vdot(wda, wda)))
    g_da = complex(np.vdot(wda, wa))  # conj(wda) . wa = da^H R^{-1} a

    c = 2.0 * a1 / geom.m
    f = np.zeros((1 + 2 * t_p, 1 + 2 * t_p))
    f[0, 0] = c * float(np.sum(np.abs(s) ** 2)) * g_dd
    cross_re = c * np.real(np.conj(s) * g_da)
    cross_im = -c * np.imag(np.conj(s) * g_da)
    f[0, 1 : 1 + t_p] = cross_re
    f[1 : 1 + t_p, 0] = cross_re
    f[0, 1 + t_p :] = cross_im
    f[1 + t_p :, 0] = cross_im
    diag = c * g_aa
    idx = np.arange(1, 1 + 2 * t_p)
    f[idx, idx] = diag
    return f


def fim_noise_block(
    param: NoiseParameterization,
    theta_n: np.ndarray,
    alpha_2,
    m: int,
    t_total: int,
) -> np.ndarray:
    """Noise-parameter FIM for T = T_p + T_s noise-equivalent snapshots.

    T ([alpha_2 / (M(M+1)) - 1] tr(R^{-1} R_j) tr(R^{-1} R_k)
       + alpha_2 / (M(M+1)) tr(R^{-1} R_j R^{-1} R_k)).

    For the Gaussian value alpha_2 = M(M+1) the bracket vanishes and the
    classical T tr(R^{-1} R_j R^{-1} R_k) form remains.
    """
    a2 = _alpha_value(alpha_2, "alpha_2")
    if t_total < 0:
        raise ValueError("t_total must be >= 0")
    theta_n = np.atleast_1d(np.asarray(theta_n, dtype=float))
    r_entries = np.asarray(param.cov(theta_n), dtype=np.complex128)
    if r_entries.shape != (m, m):
        raise ValueError(f"parameterization covariance must be {m}x{m}")
    r = HermitianMatrix(r_entries)
    derivs = [np.asarray(d, dtype=np.complex128) for d in param.cov_derivs(theta_n)]
    if len(derivs) != param.dim:
        raise ValueError("number of derivative matrices must equal param.dim")

    # S_j = R^{-1} R_j; tr(S_j) and tr(S_j S_k) assemble both terms
    s_mats = [r.solve(d) for d in derivs]
    tr_s = np.array([np.trace(sj).real for sj in s_mats])
    p = param.dim
    scale = a2 / (m * (m + 1.0))
    f = np.empty((p, p))
    for j in range(p):
        for k in range(j, p):
            tr_jk = float(np.trace(s_mats[j] @ s_mats[k]).real)
            val = t_total * ((scale - 1.0) * tr_s[j] * tr_s[k] + scale * tr_jk)
            f[j, k] = val
            f[k, j] = val
    return f


def crb_doa(sc: Scenario, waveforms: np.ndarray, alpha_1) -> float:
    """DoA CRB: the (phi, phi) entry of the inverse signal FIM, in rad^2.

    Waveforms are deterministic nuisances; the inversion performs the Schur
    complement against them.  By the scaling F_K = (alpha_1 / M) F_G, the
    K-noise CRB is (M / alpha_1) times the Gaussian conditional CRB.  Raises
    for divergent alpha_1 (non-regular regime) and for unidentifiable
    geometries (zero waveforms, or whitened steering derivative parallel to
    the whitened steering vector).
    """
    f = fim_signal_block(sc, waveforms, alpha_1)
    try:
        f_inv = np.linalg.inv(f)
    except np.linalg.LinAlgError as exc:
        raise ValueError("DoA unidentifiable: singular signal FIM") from exc
    crb = float(f_inv[0, 0])
    if not (math.isfinite(crb) and crb > 0.0):
        raise ValueError("DoA unidentifiable: singular signal FIM")
    return crb


def crb_doa_gaussian(sc: Scenario, waveforms: np.ndarray) -> float:
    """Gaussian conditional-model DoA CRB (alpha_1 = M)."""
    return crb_doa(sc, waveforms, float(sc.geometry.m))
