"""Pydantic request/response models for the HTTP service.

Complex matrices travel as parallel real/imaginary nested lists
(``{"re": [[...]], "im": [[...]]}``), row-major, one row per sensor.
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..array_model import ArrayGeometry, Scenario
from ..harness import ExperimentConfig, MseCurve, ReferenceCurve, SweepResult


class ComplexMatrix(BaseModel):
    re: list[list[float]]
    im: list[list[float]]

    @model_validator(mode="after")
    def _check_shapes(self):
        def shape(rows):
            if not rows or any(len(r) != len(rows[0]) for r in rows):
                raise ValueError("matrix rows must be non-empty and equal length")
            return (len(rows), len(rows[0]))

        if shape(self.re) != shape(self.im):
            raise ValueError("re and im must have identical shapes")
        return self

    def to_numpy(self) -> np.ndarray:
        return np.asarray(self.re, dtype=float) + 1j * np.asarray(self.im, dtype=float)

    @classmethod
    def from_numpy(cls, a: np.ndarray) -> "ComplexMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
        return cls(re=a.real.tolist(), im=a.imag.tolist())


class ScenarioModel(BaseModel):
    m: int = 16
    spacing: float = 0.5
    phi0_deg: float = 10.0
    rho: float = 0.99
    snr_db: float = 3.0
    nu: float
    beta: float | None = None
    t_p: int
    t_s: int
    eta: float = 0.01
    mixture_alpha: float = 0.0

    def to_scenario(self) -> Scenario:
        return Scenario(
            geometry=ArrayGeometry(m=self.m, spacing=self.spacing),
            phi0=math.radians(self.phi0_deg),
            rho=self.rho,
            snr_db=self.snr_db,
            nu=self.nu,
            t_p=self.t_p,
            t_s=self.t_s,
            beta=self.beta,
            eta=self.eta,
            mixture_alpha=self.mixture_alpha,
        )

    @classmethod
    def from_scenario(cls, sc: Scenario) -> "ScenarioModel":
        return cls(
            m=sc.geometry.m,
            spacing=sc.geometry.spacing,
            phi0_deg=math.degrees(sc.phi0),
            rho=sc.rho,
            snr_db=sc.snr_db,
            nu=sc.nu,
            beta=sc.beta,
            t_p=sc.t_p,
            t_s=sc.t_s,
            eta=sc.eta,
            mixture_alpha=sc.mixture_alpha,
        )


class CrbRequest(BaseModel):
    scenario: ScenarioModel
    alpha_samples: int = 1_000_000
    seed: int = 0


class CrbResponse(BaseModel):
    crb_g_rad2: float
    crb_k_rad2: float | None
    rate_lower_rad2: float | None
    rate_upper_rad2: float | None
    alpha_1: float | None
    fim_signal: str
    fim_noise: str


class AlphaRequest(BaseModel):
    nu_list: list[float] = Field(min_length=1)
    m: int = 16
    beta_rule: str = "inverse_nu"
    n_mc: int = 1_000_000
    seed: int = 0
    n_boot: int = 64
    include_gaussian: bool = True


class AlphaRow(BaseModel):
    nu: float | None  # None encodes the analytic Gaussian reference row
    beta: float | None
    mu: int
    mc: float
    mc_stderr: float
    three_term: float | None
    one_term: float | None
    rel_spread: float | None


class AlphaResponse(BaseModel):
    rows: list[AlphaRow]


class SweepRequest(BaseModel):
    scenario: ScenarioModel
    sweep_axis: str
    sweep_values: list[float] = Field(min_length=1)
    estimators: list[str] = Field(min_length=1)
    cov_modes: list[str] = ["known"]
    trials: int = 1000
    seed: int = 0
    n_grid: int = 201
    threads: int = 1

    def to_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            scenario=self.scenario.to_scenario(),
            sweep_axis=self.sweep_axis,
            sweep_values=tuple(self.sweep_values),
            estimators=tuple(self.estimators),
            cov_modes=tuple(self.cov_modes),
            trials=self.trials,
            master_seed=self.seed,
            n_grid=self.n_grid,
        )


class CurveModel(BaseModel):
    estimator: str
    cov_mode: str
    axis: str
    axis_values: list[float]
    mse: list[float | None]
    stderr: list[float | None]
    trials_ok: list[int]
    failures: list[int]
    edge_hits: list[int]

    @classmethod
    def from_curve(cls, c: MseCurve) -> "CurveModel":
        return cls(
            estimator=c.estimator,
            cov_mode=c.cov_mode,
            axis=c.axis,
            axis_values=list(c.axis_values),
            mse=[None if math.isnan(v) else v for v in c.mse],
            stderr=[None if math.isnan(v) else v for v in c.stderr],
            trials_ok=list(c.trials_ok),
            failures=list(c.failures),
            edge_hits=list(c.edge_hits),
        )

    def to_curve(self) -> MseCurve:
        return MseCurve(
            estimator=self.estimator,
            cov_mode=self.cov_mode,
            axis=self.axis,
            axis_values=tuple(self.axis_values),
            mse=tuple(math.nan if v is None else v for v in self.mse),
            stderr=tuple(math.nan if v is None else v for v in self.stderr),
            trials_ok=tuple(self.trials_ok),
            failures=tuple(self.failures),
            edge_hits=tuple(self.edge_hits),
        )


class ReferenceModel(BaseModel):
    name: str
    axis: str
    axis_values: list[float]
    values: list[float | None]

    @classmethod
    def from_reference(cls, ref: ReferenceCurve) -> "ReferenceModel":
        return cls(
            name=ref.name,
            axis=ref.axis,
            axis_values=list(ref.axis_values),
            values=[None if math.isnan(v) else v for v in ref.values],
        )

    def to_reference(self) -> ReferenceCurve:
        return ReferenceCurve(
            name=self.name,
            axis=self.axis,
            axis_values=tuple(self.axis_values),
            values=tuple(math.nan if v is None else v for v in self.values),
        )


class SweepResponse(BaseModel):
    curves: list[CurveModel]
    references: list[ReferenceModel]

    @classmethod
    def from_result(cls, result: SweepResult) -> "SweepResponse":
        return cls(
            curves=[CurveModel.from_curve(c) for c in result.curves],
            references=[ReferenceModel.from_reference(r) for r in result.references],
        )

    def to_result(self) -> SweepResult:
        return SweepResult(
            curves=tuple(c.to_curve() for c in self.curves),
            references=tuple(r.to_reference() for r in self.references),
        )


class CovestRequest(BaseModel):
    y: ComplexMatrix
    method: str = "racg"  # ml_k | tyler_aml | racg
    nu: float | None = None
    beta: float | None = None
    eta: float = 0.01
    tol: float = 1e-8
    max_iter: int = 200


class CovestResponse(BaseModel):
    r_hat: ComplexMatrix
    iterations: int
    final_delta: float
    converged: bool
    trace: float
    condition_number: float


class BoundsRequest(BaseModel):
    scenario: ScenarioModel
    t_p_values: list[int] = Field(min_length=1)


class BoundsRow(BaseModel):
    t_p: int
    lower_rad2: float
    upper_rad2: float
    crb_g_rad2: float


class BoundsResponse(BaseModel):
    nu: float
    beta: float
    rows: list[BoundsRow]
