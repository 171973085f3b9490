"""Command-line client for the kdoa service.

Subcommands: ``crb``, ``alpha``, ``mse-sweep``, ``covest``, ``bounds`` and
``serve``.  By default every command talks to an in-process instance of the
FastAPI app; pass ``--server http://host:port`` to target a running service
(start one with ``kdoa serve``).

Exit status is 0 on success and 2 on any error, with a one-line diagnostic on
stderr.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .harness import ExperimentConfig, emit_csv, parse_config
from .service.schemas import (
    ComplexMatrix,
    ScenarioModel,
    SweepRequest,
    SweepResponse,
)

_RAD2_TO_DEG2 = (180.0 / math.pi) ** 2


class CliError(RuntimeError):
    pass


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server.rstrip("/"), timeout=None)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        raise CliError(f"{path} failed ({resp.status_code}): {detail}")
    return resp.json()


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        raise CliError("this command requires --config <path>")
    return parse_config(args.config)


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _fmt_opt(v) -> str:
    return "" if v is None else format(v, ".17e")


# ----------------------------------------------------------------------------
# subcommands

def _cmd_crb(args) -> int:
    cfg = _load_config(args)
    seed = args.seed if args.seed is not None else cfg.master_seed
    payload = {
        "scenario": ScenarioModel.from_scenario(cfg.scenario).model_dump(),
        "seed": seed,
    }
    with _client(args.server) as client:
        data = _post(client, "/v1/crb", payload)
    unit, scale = ("deg^2", _RAD2_TO_DEG2) if args.degrees else ("rad^2", 1.0)
    lines = [
        f"fim_signal = {data['fim_signal']}",
        f"fim_noise = {data['fim_noise']}",
        f"crb_g = {data['crb_g_rad2'] * scale:.6e} {unit}",
    ]
    if data["crb_k_rad2"] is not None:
        lines.append(f"crb_k = {data['crb_k_rad2'] * scale:.6e} {unit}")
        lines.append(f"alpha_1 = {data['alpha_1']:.6f}")
    if data["rate_lower_rad2"] is not None:
        lines.append(f"rate_lower = {data['rate_lower_rad2'] * scale:.6e} {unit}")
        lines.append(f"rate_upper = {data['rate_upper_rad2'] * scale:.6e} {unit}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_alpha(args) -> int:
    nu_list = [float(v) for v in args.nu_list.split(",") if v.strip()]
    payload = {
        "nu_list": nu_list,
        "m": args.m,
        "beta_rule": args.beta_rule,
        "n_mc": args.n_mc,
        "seed": args.seed if args.seed is not None else 0,
        "n_boot": args.n_boot,
        "include_gaussian": not args.no_gaussian_row,
    }
    with _client(args.server) as client:
        data = _post(client, "/v1/alpha", payload)
    out = ["nu,beta,mu,mc,mc_stderr,three_term,one_term,rel_spread"]
    for r in data["rows"]:
        nu = "gaussian" if r["nu"] is None else repr(r["nu"])
        beta = "" if r["beta"] is None else repr(r["beta"])
        out.append(
            f"{nu},{beta},{r['mu']},{_fmt_opt(r['mc'])},{_fmt_opt(r['mc_stderr'])},"
            f"{_fmt_opt(r['three_term'])},{_fmt_opt(r['one_term'])},{_fmt_opt(r['rel_spread'])}"
        )
    _write_or_print("\n".join(out) + "\n", args.out)
    return 0


def _cmd_mse_sweep(args) -> int:
    cfg = _load_config(args)
    seed = args.seed if args.seed is not None else cfg.master_seed
    req = SweepRequest(
        scenario=ScenarioModel.from_scenario(cfg.scenario),
        sweep_axis=cfg.sweep_axis,
        sweep_values=list(cfg.sweep_values),
        estimators=list(cfg.estimators),
        cov_modes=list(cfg.cov_modes),
        trials=cfg.trials,
        seed=seed,
        n_grid=cfg.n_grid,
        threads=args.threads,
    )
    with _client(args.server) as client:
        data = _post(client, "/v1/mse-sweep", req.model_dump())
    result = SweepResponse.model_validate(data).to_result()
    text = emit_csv(result, degrees=args.degrees)
    _write_or_print(text, args.out)
    return 0


def _cmd_covest(args) -> int:
    y = _load_snapshots(args.data)
    payload = {
        "y": ComplexMatrix.from_numpy(y).model_dump(),
        "method": args.method,
        "nu": args.nu,
        "beta": args.beta,
        "eta": args.eta,
        "tol": args.tol,
        "max_iter": args.max_iter,
    }
    with _client(args.server) as client:
        data = _post(client, "/v1/covest", payload)
    if args.out:
        r = ComplexMatrix.model_validate(data["r_hat"]).to_numpy()
        np.save(args.out, r)
    sys.stdout.write(
        f"method = {args.method}\n"
        f"shape = {len(data['r_hat']['re'])}x{len(data['r_hat']['re'][0])}\n"
        f"iterations = {data['iterations']}\n"
        f"final_delta = {data['final_delta']:.3e}\n"
        f"converged = {data['converged']}\n"
        f"trace = {data['trace']:.6f}\n"
        f"condition_number = {data['condition_number']:.6e}\n"
    )
    return 0


def _cmd_bounds(args) -> int:
    cfg = _load_config(args)
    if cfg.sweep_axis != "t_p":
        raise CliError("bounds requires a config with sweep = t_p")
    payload = {
        "scenario": ScenarioModel.from_scenario(cfg.scenario).model_dump(),
        "t_p_values": [int(v) for v in cfg.sweep_values],
    }
    with _client(args.server) as client:
        data = _post(client, "/v1/bounds", payload)
    unit = "deg2" if args.degrees else "rad2"
    scale = _RAD2_TO_DEG2 if args.degrees else 1.0
    out = [f"t_p,lower_{unit},upper_{unit},crb_g_{unit}"]
    for r in data["rows"]:
        out.append(
            f"{r['t_p']},{format(r['lower_rad2'] * scale, '.17e')},"
            f"{format(r['upper_rad2'] * scale, '.17e')},"
            f"{format(r['crb_g_rad2'] * scale, '.17e')}"
        )
    _write_or_print("\n".join(out) + "\n", args.out)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def _load_snapshots(path: str) -> np.ndarray:
    """Load an M x T complex snapshot matrix from .npy or CSV.

    CSV cells are complex literals numpy understands, e.g. ``1.5+0.25j``.
    """
    p = Path(path)
    if not p.exists():
        raise CliError(f"snapshot file not found: {path}")
    if p.suffix == ".npy":
        y = np.load(p)
    else:
        y = np.loadtxt(p, dtype=np.complex128, delimiter=",", ndmin=2)
    y = np.atleast_2d(np.asarray(y, dtype=np.complex128))
    return y


# ----------------------------------------------------------------------------
# argument parsing

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (key = value lines)")
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    common.add_argument("--out", help="output file (CSV/npy); stdout when omitted")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--degrees", action="store_true", help="report MSE/CRB in deg^2")
    common.add_argument("--server", help="remote service URL (default: in-process)")

    parser = argparse.ArgumentParser(
        prog="kdoa",
        description="DoA estimation benchmarks in K-distributed noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("crb", parents=[common], help="print CRB / rate bounds for a scenario")
    p.set_defaults(func=_cmd_crb)

    p = sub.add_parser("alpha", parents=[common], help="alpha_mu approximation table")
    p.add_argument("--nu-list", default="1.5,2,3,10")
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--beta-rule", default="inverse_nu", choices=["inverse_nu", "unit"])
    p.add_argument("--n-mc", type=int, default=1_000_000)
    p.add_argument("--n-boot", type=int, default=64)
    p.add_argument("--no-gaussian-row", action="store_true")
    p.set_defaults(func=_cmd_alpha)

    p = sub.add_parser("mse-sweep", parents=[common], help="Monte-Carlo MSE sweep to CSV")
    p.set_defaults(func=_cmd_mse_sweep)

    p = sub.add_parser("covest", parents=[common], help="fit a covariance from snapshot data")
    p.add_argument("--data", required=True, help=".npy or CSV complex snapshot matrix (M x T)")
    p.add_argument("--method", default="racg", choices=["ml_k", "tyler_aml", "racg"])
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=200)
    p.set_defaults(func=_cmd_covest)

    p = sub.add_parser("bounds", parents=[common], help="non-regular MSE sandwich curves")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
