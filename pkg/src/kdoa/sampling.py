"""Random generation of textures, modular variates and snapshot sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .array_model import Scenario, snr_to_power, steering_vector

__all__ = [
    "SnapshotSet",
    "sample_texture",
    "sample_modular_variate",
    "sample_snapshots",
]


@dataclass
class SnapshotSet:
    """Primary (signal + noise) and secondary (noise only) snapshot matrices.

    The simulator-side texture draws and true waveforms are kept on private
    fields; estimators must never read them.  The single sanctioned consumer
    is the min-texture oracle estimator, which goes through the explicit
    ``oracle_*`` accessors.
    """

    x: np.ndarray
    y: np.ndarray
    seed: int | None = None
    _tau_primary: np.ndarray = field(default=None, repr=False)
    _waveforms: np.ndarray = field(default=None, repr=False)

    def oracle_textures(self) -> np.ndarray:
        """Simulator-side primary textures; for oracle estimators only."""
        return self._tau_primary

    def oracle_waveforms(self) -> np.ndarray:
        """Simulator-side true waveforms; for oracle/diagnostic use only."""
        return self._waveforms

    def oracle_min_tau_index(self) -> int:
        """Index of the primary snapshot with the smallest hidden texture."""
        return int(np.argmin(self._tau_primary))


def _as_rng(rng) -> tuple[np.random.Generator, int | None]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng)), int(rng)
    if isinstance(rng, np.random.SeedSequence):
        return np.random.default_rng(rng), None
    raise TypeError("rng must be an int seed, a SeedSequence or a numpy Generator")


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, I): independent real/imag parts of variance 1/2, E|w|^2 = 1."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_texture(nu: float, beta: float, n: int, rng) -> np.ndarray:
    """n i.i.d. Gamma(shape=nu, scale=beta) texture draws."""
    if not (nu > 0.0 and beta > 0.0):
        raise ValueError("sample_texture requires nu > 0 and beta > 0")
    gen, _ = _as_rng(rng)
    return gen.gamma(nu, beta, size=int(n))


def sample_modular_variate(nu: float, beta: float, m: int, n: int, rng) -> np.ndarray:
    """Draws of Q = Gamma(nu, beta) x Gamma(M, 1).

    The second factor is the squared norm of an M-variate CN(0, I) vector
    under the E|w_i|^2 = 1 convention.
    """
    if not (nu > 0.0 and beta > 0.0):
        raise ValueError("sample_modular_variate requires nu > 0 and beta > 0")
    gen, _ = _as_rng(rng)
    return gen.gamma(nu, beta, size=int(n)) * gen.gamma(float(m), 1.0, size=int(n))


def sample_snapshots(sc: Scenario, rng) -> SnapshotSet:
    """Draw a full primary/secondary snapshot set for a scenario.

    Primary columns follow

        x_t = a(phi0) s_t + sqrt(1 - alpha) sqrt(tau_t) R^{1/2} w_t
              + sqrt(alpha) v_t

    with s_t ~ CN(0, P), tau_t ~ Gamma(nu, beta) and w_t, v_t ~ CN(0, I_M);
    secondary columns are always pure K noise.  alpha = 0 reproduces the pure
    K model exactly (no Gaussian admixture draws are consumed).

    The draw order is fixed (waveforms, primary textures, primary speckle,
    optional Gaussian admixture, secondary textures, secondary speckle) so a
    given seed yields a bit-identical SnapshotSet.
    """
    gen, seed = _as_rng(rng)
    geom = sc.geometry
    m, t_p, t_s = geom.m, sc.t_p, sc.t_s
    r = sc.speckle_covariance()
    a0 = steering_vector(geom, sc.phi0)

    snr = sc.snr_linear
    power = snr_to_power(snr, r, a0) if snr > 0.0 else 0.0
    s = np.sqrt(power) * _complex_normal(gen, t_p)

    tau_p = gen.gamma(sc.nu, sc.beta, size=t_p)
    speckle = r.cholesky @ _complex_normal(gen, (m, t_p))
    alpha = sc.mixture_alpha
    noise = np.sqrt(1.0 - alpha) * np.sqrt(tau_p) * speckle
    if alpha > 0.0:
        noise = noise + np.sqrt(alpha) * _complex_normal(gen, (m, t_p))
    x = np.outer(a0, s) + noise

    tau_s = gen.gamma(sc.nu, sc.beta, size=t_s)
    y = np.sqrt(tau_s) * (r.cholesky @ _complex_normal(gen, (m, t_s)))

    return SnapshotSet(x=x, y=y, seed=seed, _tau_primary=tau_p, _waveforms=s)
