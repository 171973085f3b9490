"""FastAPI service exposing the estimation toolkit.

Endpoints (all under /v1):

- GET  /v1/health     liveness probe
- POST /v1/crb        CRB / non-regular bounds for one scenario
- POST /v1/alpha      Monte-Carlo vs closed-form alpha_mu table
- POST /v1/mse-sweep  Monte-Carlo MSE sweep (the heavy benchmark)
- POST /v1/covest     covariance fixed point from posted secondary data
- POST /v1/bounds     MSE sandwich curves over a list of T_p values

Domain errors surface as HTTP 400 with the error message in ``detail``.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..array_model import snr_to_power, steering_vector
from ..cov_est import cov_ml_k, cov_racg, cov_tyler_aml
from ..estimators import EstimationError
from ..extremes import mse_rate_bounds
from ..fim_crb import alpha_mu, crb_doa, crb_doa_gaussian, regularity
from ..harness import run_alpha_table, run_mse_sweep
from .schemas import (
    AlphaRequest,
    AlphaResponse,
    AlphaRow,
    BoundsRequest,
    BoundsResponse,
    BoundsRow,
    ComplexMatrix,
    CovestRequest,
    CovestResponse,
    CrbRequest,
    CrbResponse,
    SweepRequest,
    SweepResponse,
)

COVEST_METHODS = ("ml_k", "tyler_aml", "racg")


def _asymptotic_waveforms(sc) -> np.ndarray:
    r = sc.speckle_covariance()
    p = snr_to_power(sc.snr_linear, r, steering_vector(sc.geometry, sc.phi0))
    return np.full(sc.t_p, math.sqrt(p), dtype=complex)


def create_app() -> FastAPI:
    app = FastAPI(title="kdoa", version=__version__)

    @app.exception_handler(ValueError)
    async def _value_error(request, exc: ValueError):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/crb", response_model=CrbResponse)
    def crb(req: CrbRequest) -> CrbResponse:
        sc = req.scenario.to_scenario()
        reg = regularity(sc.nu)
        s = _asymptotic_waveforms(sc)
        crb_g = crb_doa_gaussian(sc, s)
        crb_k = a1_val = lower = upper = None
        if sc.nu > 1.0:
            a1 = alpha_mu(
                1, sc.nu, sc.beta, sc.geometry.m,
                method="monte_carlo", n_samples=req.alpha_samples, rng=req.seed,
            )
            a1_val = a1.value
            crb_k = crb_doa(sc, s, a1)
        elif sc.nu < 1.0:
            rb = mse_rate_bounds(sc.t_p, sc.nu, sc.beta, crb_g)
            lower, upper = rb.lower, rb.upper
        return CrbResponse(
            crb_g_rad2=crb_g,
            crb_k_rad2=crb_k,
            rate_lower_rad2=lower,
            rate_upper_rad2=upper,
            alpha_1=a1_val,
            fim_signal=reg.fim_signal,
            fim_noise=reg.fim_noise,
        )

    @app.post("/v1/alpha", response_model=AlphaResponse)
    def alpha(req: AlphaRequest) -> AlphaResponse:
        rows = run_alpha_table(
            req.nu_list,
            m=req.m,
            beta_rule=req.beta_rule,
            n_mc=req.n_mc,
            seed=req.seed,
            n_boot=req.n_boot,
            include_gaussian=req.include_gaussian,
        )
        return AlphaResponse(
            rows=[
                AlphaRow(
                    nu=None if math.isinf(r.nu) else r.nu,
                    beta=None if math.isnan(r.beta) else r.beta,
                    mu=r.mu,
                    mc=r.mc,
                    mc_stderr=r.mc_stderr,
                    three_term=r.three_term,
                    one_term=r.one_term,
                    rel_spread=r.rel_spread,
                )
                for r in rows
            ]
        )

    @app.post("/v1/mse-sweep", response_model=SweepResponse)
    def mse_sweep(req: SweepRequest) -> SweepResponse:
        try:
            result = run_mse_sweep(req.to_config(), threads=req.threads)
        except EstimationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return SweepResponse.from_result(result)

    @app.post("/v1/covest", response_model=CovestResponse)
    def covest(req: CovestRequest) -> CovestResponse:
        y = req.y.to_numpy()
        if req.method not in COVEST_METHODS:
            raise HTTPException(
                status_code=400,
                detail=f"unknown method {req.method!r}; expected one of {COVEST_METHODS}",
            )
        if req.method == "ml_k":
            if req.nu is None:
                raise HTTPException(status_code=400, detail="ml_k requires nu")
            beta = req.beta if req.beta is not None else 1.0 / req.nu
            fp = cov_ml_k(y, req.nu, beta, tol=req.tol, max_iter=req.max_iter)
        elif req.method == "tyler_aml":
            if req.nu is None:
                raise HTTPException(status_code=400, detail="tyler_aml requires nu")
            fp = cov_tyler_aml(y, req.nu, tol=req.tol, max_iter=req.max_iter)
        else:
            fp = cov_racg(y, req.eta, tol=req.tol, max_iter=req.max_iter)
        entries = fp.r_hat.entries
        return CovestResponse(
            r_hat=ComplexMatrix.from_numpy(entries),
            iterations=fp.iterations,
            final_delta=fp.final_delta,
            converged=fp.converged,
            trace=float(np.trace(entries).real),
            condition_number=float(np.linalg.cond(entries)),
        )

    @app.post("/v1/bounds", response_model=BoundsResponse)
    def bounds(req: BoundsRequest) -> BoundsResponse:
        sc = req.scenario.to_scenario()
        rows = []
        for t_p in req.t_p_values:
            sc_t = sc.with_axis("t_p", t_p)
            crb_g = crb_doa_gaussian(sc_t, _asymptotic_waveforms(sc_t))
            rb = mse_rate_bounds(t_p, sc_t.nu, sc_t.beta, crb_g)
            rows.append(
                BoundsRow(
                    t_p=t_p,
                    lower_rad2=rb.lower,
                    upper_rad2=rb.upper,
                    crb_g_rad2=crb_g,
                )
            )
        return BoundsResponse(nu=sc.nu, beta=sc.beta, rows=rows)

    return app


app = create_app()
