"""Experiment configuration, Monte-Carlo MSE sweeps and CSV emission.

Config files are flat ``key = value`` text, one key per line, ``#`` comments,
lists comma-separated.  Keys:

=================  ========  =====================================================
key                default   meaning
=================  ========  =====================================================
m                  16        sensor count
spacing            0.5       element spacing in wavelengths
phi0_deg           10.0      true DoA in degrees
rho                0.99      exponential covariance decay
snr_db             3.0       SNR in dB (P * a^H R^{-1} a)
nu                 required  texture shape
beta               1/nu      texture scale
t_p                required  primary snapshot count (when not swept)
t_s                required  secondary snapshot count (when not swept)
eta                0.01      RACG regularization
mixture_alpha      0.0       Gaussian mixture weight
sweep              required  axis: t_p | t_s | nu | mixture_alpha
sweep_values       required  comma list of axis values
estimators         required  comma list of ml_k | aml_k | gaussian | aml_min_oracle
cov_modes          known     known | racg; single value or one per estimator
trials             required  Monte-Carlo trials per axis value
seed               0         64-bit master seed
n_grid             201       coarse search grid size (grid mode)
search             local     DoA search protocol: local | grid
=================  ========  =====================================================

Per-trial randomness comes from ``SeedSequence([seed, axis_index, trial])``,
so results are reproducible bit-for-bit regardless of the worker count.  When
sweeping ``nu``, ``beta`` is re-derived as 1/nu at each point.

The default ``search = local`` runs the fminbnd-style bounded Brent search of
the published benchmark protocol, which the reference MSE curves assume; set
``search = grid`` for the global grid-then-refine estimator.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .array_model import ArrayGeometry, Scenario, snr_to_power, steering_vector
from .estimators import ESTIMATOR_KINDS, EstimationError, estimate_doa
from .extremes import mse_rate_bounds
from .fim_crb import alpha_mu, crb_doa, crb_doa_gaussian, score_phi
from .cov_est import cov_racg
from .sampling import sample_modular_variate, sample_snapshots

__all__ = [
    "SWEEP_AXES",
    "COV_MODES",
    "ConfigError",
    "ExperimentConfig",
    "MseCurve",
    "ReferenceCurve",
    "SweepResult",
    "AlphaTableRow",
    "parse_config",
    "parse_config_text",
    "format_config",
    "run_mse_sweep",
    "fit_loglog_slope",
    "run_alpha_table",
    "emit_csv",
]

SWEEP_AXES = ("t_p", "t_s", "nu", "mixture_alpha")
COV_MODES = ("known", "racg")

_RAD2_TO_DEG2 = (180.0 / math.pi) ** 2


class ConfigError(ValueError):
    """Configuration parse/validation error; the message names the key."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    sweep_axis: str
    sweep_values: tuple[float, ...]
    estimators: tuple[str, ...]
    cov_modes: tuple[str, ...]
    trials: int
    master_seed: int
    n_grid: int = 201
    search: str = "local"

    def __post_init__(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep: unknown axis {self.sweep_axis!r}")
        if not self.sweep_values:
            raise ConfigError("sweep_values: must be non-empty")
        if not self.estimators:
            raise ConfigError("estimators: must be non-empty")
        for e in self.estimators:
            if e not in ESTIMATOR_KINDS:
                raise ConfigError(f"estimators: unknown estimator {e!r}")
        if len(self.cov_modes) not in (1, len(self.estimators)):
            raise ConfigError(
                "cov_modes: expected a single mode or one per estimator"
            )
        for m in self.cov_modes:
            if m not in COV_MODES:
                raise ConfigError(f"cov_modes: unknown mode {m!r}")
        if self.trials < 1:
            raise ConfigError("trials: must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("seed: must be a non-negative 64-bit integer")
        if self.n_grid < 3:
            raise ConfigError("n_grid: must be >= 3")
        if self.search not in ("local", "grid"):
            raise ConfigError(f"search: unknown mode {self.search!r}")

    @property
    def series(self) -> tuple[tuple[str, str], ...]:
        """(estimator, cov_mode) pairs in configured order."""
        modes = self.cov_modes
        if len(modes) == 1:
            modes = modes * len(self.estimators)
        return tuple(zip(self.estimators, modes))


@dataclass(frozen=True)
class MseCurve:
    estimator: str
    cov_mode: str
    axis: str
    axis_values: tuple[float, ...]
    mse: tuple[float, ...]
    stderr: tuple[float, ...]
    trials_ok: tuple[int, ...]
    failures: tuple[int, ...]
    edge_hits: tuple[int, ...]


@dataclass(frozen=True)
class ReferenceCurve:
    name: str
    axis: str
    axis_values: tuple[float, ...]
    values: tuple[float, ...]


@dataclass(frozen=True)
class SweepResult:
    curves: tuple[MseCurve, ...]
    references: tuple[ReferenceCurve, ...]


@dataclass(frozen=True)
class AlphaTableRow:
    nu: float
    beta: float
    mu: int
    mc: float
    mc_stderr: float
    three_term: float | None
    one_term: float | None
    rel_spread: float | None


# ----------------------------------------------------------------------------
# config parsing

_SCENARIO_KEYS = {
    "m": int,
    "spacing": float,
    "phi0_deg": float,
    "rho": float,
    "snr_db": float,
    "nu": float,
    "beta": float,
    "t_p": int,
    "t_s": int,
    "eta": float,
    "mixture_alpha": float,
}
_HARNESS_KEYS = {
    "sweep": str,
    "sweep_values": "float_list",
    "estimators": "str_list",
    "cov_modes": "str_list",
    "trials": int,
    "seed": int,
    "n_grid": int,
    "search": str,
}
_REQUIRED = ("nu", "t_p", "t_s", "sweep", "sweep_values", "estimators", "trials")
_DEFAULTS = {
    "m": 16,
    "spacing": 0.5,
    "phi0_deg": 10.0,
    "rho": 0.99,
    "snr_db": 3.0,
    "eta": 0.01,
    "mixture_alpha": 0.0,
    "cov_modes": ("known",),
    "seed": 0,
    "n_grid": 201,
    "search": "local",
}


def _convert(key: str, kind, raw: str):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is str:
            return raw
        if kind == "float_list":
            return tuple(float(v.strip()) for v in raw.split(",") if v.strip())
        if kind == "str_list":
            return tuple(v.strip() for v in raw.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse value {raw!r}") from exc
    raise AssertionError(f"unhandled kind for {key}")


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse flat key = value config text into an ExperimentConfig."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key in _SCENARIO_KEYS:
            kind = _SCENARIO_KEYS[key]
        elif key in _HARNESS_KEYS:
            kind = _HARNESS_KEYS[key]
        else:
            raise ConfigError(f"{key}: unknown configuration key")
        if key in values:
            raise ConfigError(f"{key}: duplicate key")
        values[key] = _convert(key, kind, raw)
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"{key}: required key is missing")
    merged = {**_DEFAULTS, **values}

    try:
        scenario = Scenario(
            geometry=ArrayGeometry(m=merged["m"], spacing=merged["spacing"]),
            phi0=math.radians(merged["phi0_deg"]),
            rho=merged["rho"],
            snr_db=merged["snr_db"],
            nu=merged["nu"],
            t_p=merged["t_p"],
            t_s=merged["t_s"],
            beta=merged.get("beta"),
            eta=merged["eta"],
            mixture_alpha=merged["mixture_alpha"],
        )
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from exc
    return ExperimentConfig(
        scenario=scenario,
        sweep_axis=merged["sweep"],
        sweep_values=tuple(merged["sweep_values"]),
        estimators=tuple(merged["estimators"]),
        cov_modes=tuple(merged["cov_modes"]),
        trials=merged["trials"],
        master_seed=merged["seed"],
        n_grid=merged["n_grid"],
        search=merged["search"],
    )


def parse_config(path) -> ExperimentConfig:
    """Read and parse a config file."""
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def format_config(cfg: ExperimentConfig) -> str:
    """Canonical config text; parse_config_text(format_config(cfg)) == cfg."""
    sc = cfg.scenario
    lines = [
        f"m = {sc.geometry.m}",
        f"spacing = {sc.geometry.spacing!r}",
        f"phi0_deg = {math.degrees(sc.phi0)!r}",
        f"rho = {sc.rho!r}",
        f"snr_db = {sc.snr_db!r}",
        f"nu = {sc.nu!r}",
        f"beta = {sc.beta!r}",
        f"t_p = {sc.t_p}",
        f"t_s = {sc.t_s}",
        f"eta = {sc.eta!r}",
        f"mixture_alpha = {sc.mixture_alpha!r}",
        f"sweep = {cfg.sweep_axis}",
        "sweep_values = " + ",".join(repr(v) for v in cfg.sweep_values),
        "estimators = " + ",".join(cfg.estimators),
        "cov_modes = " + ",".join(cfg.cov_modes),
        f"trials = {cfg.trials}",
        f"seed = {cfg.master_seed}",
        f"n_grid = {cfg.n_grid}",
        f"search = {cfg.search}",
    ]
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------------
# Monte-Carlo sweep

def _trial_substream(master_seed: int, axis_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, axis_index, trial]))


def _run_trial(cfg: ExperimentConfig, scenario: Scenario, axis_index: int,
               trial: int) -> dict:
    """One Monte-Carlo trial: shared snapshots, every configured series."""
    rng = _trial_substream(cfg.master_seed, axis_index, trial)
    ss = sample_snapshots(scenario, rng)
    interval = scenario.search_interval()
    cell = (interval[1] - interval[0]) / (cfg.n_grid - 1)

    covs: dict[str, object] = {}
    cov_failed: dict[str, str] = {}
    for _, mode in cfg.series:
        if mode in covs or mode in cov_failed:
            continue
        if mode == "known":
            covs[mode] = scenario.noise_covariance()
        else:
            try:
                covs[mode] = cov_racg(ss.y, scenario.eta).r_hat
            except ValueError as exc:
                cov_failed[mode] = str(exc)

    out = {}
    for kind, mode in cfg.series:
        key = (kind, mode)
        if mode in cov_failed:
            out[key] = None
            continue
        try:
            est = estimate_doa(
                ss.x,
                covs[mode],
                kind,
                interval,
                geometry=scenario.geometry,
                nu=scenario.nu,
                beta=scenario.beta,
                hidden_tau=ss.oracle_textures() if kind == "aml_min_oracle" else None,
                n_grid=cfg.n_grid,
            )
        except EstimationError:
            out[key] = None
            continue
        err2 = (est.phi_hat - scenario.phi0) ** 2
        edge = min(est.phi_hat - interval[0], interval[1] - est.phi_hat) <= cell
        out[key] = (err2, edge)
    return out


_ALPHA_REF_SAMPLES = 1_000_000


def run_mse_sweep(cfg: ExperimentConfig, threads: int = 1) -> SweepResult:
    """Monte-Carlo MSE curves over the configured sweep, plus reference curves.

    Trials are independent work items executed by a thread pool and reduced in
    deterministic (axis, trial) order, so the result is identical for any
    ``threads`` value.  Failed trials are excluded from the MSE and counted.
    Reference curves: the Gaussian CRB always, the K CRB where nu > 1 and the
    non-regular sandwich bounds where nu < 1 (asymptotic waveforms
    |s_t|^2 = P).
    """
    scenarios = [cfg.scenario.with_axis(cfg.sweep_axis, v) for v in cfg.sweep_values]
    tasks = [(ai, t) for ai in range(len(scenarios)) for t in range(cfg.trials)]

    def work(task):
        ai, t = task
        return _run_trial(cfg, scenarios[ai], ai, t)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(task) for task in tasks]

    curves = []
    for kind, mode in cfg.series:
        mse, stderr, n_ok, n_fail, n_edge = [], [], [], [], []
        for ai in range(len(scenarios)):
            rows = [
                results[ai * cfg.trials + t][(kind, mode)] for t in range(cfg.trials)
            ]
            errs = np.array([r[0] for r in rows if r is not None])
            edges = sum(1 for r in rows if r is not None and r[1])
            fails = sum(1 for r in rows if r is None)
            if errs.size == 0:
                mse.append(math.nan)
                stderr.append(math.nan)
            else:
                mse.append(float(np.mean(errs)))
                stderr.append(
                    float(np.std(errs, ddof=1) / math.sqrt(errs.size))
                    if errs.size > 1
                    else 0.0
                )
            n_ok.append(int(errs.size))
            n_fail.append(int(fails))
            n_edge.append(int(edges))
        curves.append(
            MseCurve(
                estimator=kind,
                cov_mode=mode,
                axis=cfg.sweep_axis,
                axis_values=tuple(float(v) for v in cfg.sweep_values),
                mse=tuple(mse),
                stderr=tuple(stderr),
                trials_ok=tuple(n_ok),
                failures=tuple(n_fail),
                edge_hits=tuple(n_edge),
            )
        )

    references = _reference_curves(cfg, scenarios)
    return SweepResult(curves=tuple(curves), references=tuple(references))


def _reference_curves(cfg: ExperimentConfig, scenarios: Sequence[Scenario]):
    axis_values = tuple(float(v) for v in cfg.sweep_values)
    crb_g_vals, crb_k_vals, lower_vals, upper_vals = [], [], [], []
    alpha_cache: dict[tuple, float] = {}
    for sc in scenarios:
        # asymptotic waveforms: |s_t|^2 = P for every snapshot
        r = sc.speckle_covariance()
        p = snr_to_power(sc.snr_linear, r, steering_vector(sc.geometry, sc.phi0))
        s = np.full(sc.t_p, math.sqrt(p), dtype=complex)
        crb_g = crb_doa_gaussian(sc, s)
        crb_g_vals.append(crb_g)
        if sc.nu > 1.0:
            key = (sc.nu, sc.beta, sc.geometry.m)
            if key not in alpha_cache:
                a1 = alpha_mu(
                    1, sc.nu, sc.beta, sc.geometry.m,
                    method="monte_carlo",
                    n_samples=_ALPHA_REF_SAMPLES,
                    rng=np.random.SeedSequence([cfg.master_seed, 0xA1FA]),
                )
                alpha_cache[key] = a1.value
            crb_k_vals.append(crb_doa(sc, s, alpha_cache[key]))
        else:
            crb_k_vals.append(math.nan)
        if sc.nu < 1.0:
            rb = mse_rate_bounds(sc.t_p, sc.nu, sc.beta, crb_g)
            lower_vals.append(rb.lower)
            upper_vals.append(rb.upper)
        else:
            lower_vals.append(math.nan)
            upper_vals.append(math.nan)

    refs = [ReferenceCurve("crb_g", cfg.sweep_axis, axis_values, tuple(crb_g_vals))]
    if any(math.isfinite(v) for v in crb_k_vals):
        refs.append(ReferenceCurve("crb_k", cfg.sweep_axis, axis_values, tuple(crb_k_vals)))
    if any(math.isfinite(v) for v in lower_vals):
        refs.append(ReferenceCurve("rate_lower", cfg.sweep_axis, axis_values, tuple(lower_vals)))
        refs.append(ReferenceCurve("rate_upper", cfg.sweep_axis, axis_values, tuple(upper_vals)))
    return refs


# ----------------------------------------------------------------------------
# post-processing

def fit_loglog_slope(curve) -> tuple[float, float]:
    """OLS slope of log(value) on log(axis) with its standard error.

    Accepts an MseCurve or an (axis_values, values) pair; needs >= 3 finite
    positive points.
    """
    if isinstance(curve, MseCurve):
        x, y = curve.axis_values, curve.mse
    elif isinstance(curve, ReferenceCurve):
        x, y = curve.axis_values, curve.values
    else:
        x, y = curve
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    x, y = np.log(x[keep]), np.log(y[keep])
    n = x.size
    if n < 3:
        raise ValueError("fit_loglog_slope requires at least 3 usable points")
    xc = x - x.mean()
    sxx = float(np.sum(xc ** 2))
    slope = float(np.sum(xc * y) / sxx)
    resid = y - (y.mean() + slope * xc)
    sigma2 = float(np.sum(resid ** 2) / (n - 2))
    return slope, math.sqrt(sigma2 / sxx)


def _bootstrap_stderr(samples: np.ndarray, n_boot: int, rng) -> float:
    n = samples.size
    if n_boot < 1:
        return float(np.std(samples, ddof=1) / math.sqrt(n))
    means = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n, n)
        means[b] = samples[idx].mean()
    return float(np.std(means, ddof=1))


def run_alpha_table(
    nu_list: Sequence[float],
    m: int = 16,
    beta_rule: str = "inverse_nu",
    n_mc: int = 1_000_000,
    seed: int = 0,
    n_boot: int = 64,
    include_gaussian: bool = True,
) -> list[AlphaTableRow]:
    """Monte-Carlo vs closed-form alpha_mu table (beta = 1/nu by default).

    The MC column carries a bootstrap standard error (the integrand is heavy
    tailed near nu = 1).  Closed-form cells are None where divergent or
    outside their validity preconditions.  ``include_gaussian`` appends an
    analytic-generator reference row (nu = inf) whose exact values are M and
    M(M+1).
    """
    if beta_rule not in ("inverse_nu", "unit"):
        raise ValueError("beta_rule must be 'inverse_nu' or 'unit'")
    rows = []
    for i, nu in enumerate(nu_list):
        beta = 1.0 / nu if beta_rule == "inverse_nu" else 1.0
        for mu in (1, 2):
            rng = np.random.default_rng(np.random.SeedSequence([seed, i, mu]))
            q = sample_modular_variate(nu, beta, m, n_mc, rng)
            vals = q ** mu * score_phi(q, nu, beta, m) ** 2
            mc = float(np.mean(vals))
            mc_se = _bootstrap_stderr(vals, n_boot, rng)
            approx = {}
            for method in ("three_term", "one_term"):
                try:
                    approx[method] = alpha_mu(mu, nu, beta, m, method=method).value
                except ValueError:
                    approx[method] = None
            triple = [mc, approx["three_term"], approx["one_term"]]
            if any(v is None for v in triple):
                spread = None
            else:
                spread = (max(triple) - min(triple)) / min(triple)
            rows.append(
                AlphaTableRow(
                    nu=float(nu),
                    beta=float(beta),
                    mu=mu,
                    mc=mc,
                    mc_stderr=mc_se,
                    three_term=approx["three_term"],
                    one_term=approx["one_term"],
                    rel_spread=spread,
                )
            )
    if include_gaussian:
        for mu, exact in ((1, float(m)), (2, float(m * (m + 1)))):
            rng = np.random.default_rng(np.random.SeedSequence([seed, 0xFFFF, mu]))
            q = rng.gamma(float(m), 1.0, size=n_mc)
            vals = q ** mu
            rows.append(
                AlphaTableRow(
                    nu=math.inf,
                    beta=math.nan,
                    mu=mu,
                    mc=float(np.mean(vals)),
                    mc_stderr=_bootstrap_stderr(vals, n_boot, rng),
                    three_term=exact,
                    one_term=exact,
                    rel_spread=None,
                )
            )
    return rows


# ----------------------------------------------------------------------------
# CSV emission

def _fmt(x: float) -> str:
    return format(x, ".17e")


def emit_csv(result: SweepResult, path=None, degrees: bool = False) -> str:
    """Serialize a sweep result to CSV; byte-identical for identical results.

    One row per (axis value, estimator, cov mode); reference curves follow as
    rows with an empty cov_mode.  Values are rad^2 unless ``degrees``.
    Returns the CSV text; writes it to ``path`` when given.
    """
    unit = "deg2" if degrees else "rad2"
    scale = _RAD2_TO_DEG2 if degrees else 1.0
    buf = io.StringIO()
    buf.write(
        f"axis,axis_value,estimator,cov_mode,mse_{unit},stderr_{unit},"
        "trials_ok,failures,edge_hits\n"
    )
    for c in result.curves:
        for i, v in enumerate(c.axis_values):
            buf.write(
                f"{c.axis},{_fmt(v)},{c.estimator},{c.cov_mode},"
                f"{_fmt(c.mse[i] * scale)},{_fmt(c.stderr[i] * scale)},"
                f"{c.trials_ok[i]},{c.failures[i]},{c.edge_hits[i]}\n"
            )
    for ref in result.references:
        for i, v in enumerate(ref.axis_values):
            buf.write(
                f"{ref.axis},{_fmt(v)},{ref.name},,{_fmt(ref.values[i] * scale)},,,,\n"
            )
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    return text
