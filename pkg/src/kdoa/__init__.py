"""DoA estimation, Cramer-Rao bounds and MSE-rate benchmarks in K noise."""

__version__ = "0.1.0"

from .array_model import (
    ArrayGeometry,
    HermitianMatrix,
    Scenario,
    exp_toeplitz_cov,
    exp_toeplitz_cov_drho,
    half_power_beamwidth,
    snr_to_power,
    steering_derivative,
    steering_vector,
)
from .cov_est import FixedPointResult, cov_ml_k, cov_racg, cov_tyler_aml
from .estimators import (
    DoaEstimate,
    EstimationError,
    aml_objective,
    estimate_doa,
    estimate_waveforms,
    gaussian_objective,
    ml_objective,
    t_statistic,
)
from .extremes import RateBound, c_constant, cdf_min_texture, limiting_cdf_v, mse_rate_bounds
from .fim_crb import (
    AlphaMu,
    NoiseParameterization,
    alpha_mu,
    crb_doa,
    crb_doa_gaussian,
    divergence_diagnostic,
    fim_noise_block,
    fim_signal_block,
    i_mu_bounds,
    moment_q,
    regularity,
    score_phi,
)
from .harness import (
    ExperimentConfig,
    MseCurve,
    SweepResult,
    emit_csv,
    fit_loglog_slope,
    parse_config,
    run_alpha_table,
    run_mse_sweep,
)
from .sampling import SnapshotSet, sample_modular_variate, sample_snapshots, sample_texture
from .specfun import bessel_k_ratio, log_bessel_k, log_gamma, ratio_bounds, reg_lower_inc_gamma
