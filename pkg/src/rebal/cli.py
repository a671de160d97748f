"""Command-line front end.

Subcommands: plan | cost | steps | simulate | optimize | pendulum | replay.
Configuration comes from a JSON document (--config) with per-flag overrides;
every command is deterministic given (config, seed). Tabular data goes to
--out as CSV or JSON; a run summary in JSON goes to stdout when --out is a
file. Exit codes: 0 success, 2 configuration or validation failure, 3
numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import costs, dynamics, fees, interpolate, optimize, stochastic
from .simplex import LossKernel, WeightVector, geodesic_angle

CLI_W_FLOOR = 0.01  # deployed pools enforce a 1% minimum weight


# ---------------------------------------------------------------------------
# deterministic serialisation: sorted keys, 17 significant digits


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    return str(x)


def render_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}"{k}": {render_json(obj[k], indent + 1)}' for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{render_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj)!r}")


def _table_text(columns, rows, fmt: str) -> str:
    if fmt == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        payload = {"columns": list(columns), "rows": [[float(v) if isinstance(v, (float, np.floating)) else v for v in row] for row in rows]}
        return render_json(payload) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")


def _emit(args, columns, rows, summary: dict | None) -> None:
    text = _table_text(columns, rows, args.format)
    if args.out:
        with open(args.out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        if summary is not None:
            print(render_json(summary))
    else:
        sys.stdout.write(text)
        if summary is not None:
            print(render_json(summary), file=sys.stderr)


# ---------------------------------------------------------------------------
# configuration


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ValueError(f"expected a comma-separated number list, got {text!r}") from None


def load_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"config is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise ValueError("config must be a JSON object")
    for key in ("w_start", "w_end"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = _parse_floats(v)
    for key in ("f", "depth", "method", "kernel", "seed", "n_paths", "mu", "grid",
                "objective", "optimizer", "tol", "max_iter", "ordering", "w_floor",
                "methods", "horizon_days"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    market = cfg.setdefault("market", {})
    if args.sigma is not None:
        market["sigma"] = _parse_floats(args.sigma)
    if args.sigma_units is not None:
        market["sigma_units"] = args.sigma_units
    if getattr(args, "dt_block_days", None) is not None:
        market["dt_block_days"] = args.dt_block_days
    fee = cfg.setdefault("fee", {})
    if args.gamma is not None:
        fee["gamma"] = args.gamma
    if args.phi is not None:
        fee["phi"] = args.phi
    cfg.setdefault("seed", 0)
    return cfg


def _weights(cfg, key: str) -> WeightVector:
    if key not in cfg:
        raise ValueError(f"missing {key!r} (flag --{key.replace('_', '-')} or config)")
    floor = float(cfg.get("w_floor", CLI_W_FLOOR))
    return WeightVector(np.asarray(cfg[key], dtype=float), w_floor=floor)


def _price_model(cfg) -> stochastic.Gbm | stochastic.MertonJump | stochastic.Garch11:
    if cfg is None:
        return stochastic.Gbm()
    if isinstance(cfg, str):
        cfg = {"kind": cfg}
    kind = cfg.get("kind", "gbm")
    if kind == "gbm":
        return stochastic.Gbm()
    if kind == "merton_jump":
        return stochastic.MertonJump(
            jumps_per_day=float(cfg["jumps_per_day"]),
            jump_sigma=float(cfg["jump_sigma"]),
            jump_mean_log=float(cfg.get("jump_mean_log", 0.0)),
        )
    if kind == "garch11":
        omega = cfg.get("omega")
        return stochastic.Garch11(
            alpha=float(cfg["alpha"]),
            beta=float(cfg["beta"]),
            omega=None if omega is None else float(omega),
        )
    raise ValueError(f"unknown price model {kind!r}")


def _market(cfg, n_tokens: int) -> stochastic.MarketParams:
    block = cfg.get("market") or {}
    if "sigma" not in block:
        raise ValueError("missing market.sigma (flag --sigma or config)")
    sigma = stochastic.to_daily_vol(
        np.asarray(block["sigma"], dtype=float), block.get("sigma_units", "daily")
    )
    sigma = np.atleast_1d(sigma)
    if sigma.size == 1 and n_tokens == 2:
        # one volatile asset against a numeraire
        sigma = np.array([float(sigma[0]), 0.0])
    if sigma.size != n_tokens:
        raise ValueError(f"market.sigma has {sigma.size} entries, need {n_tokens}")
    corr = block.get("corr")
    return stochastic.MarketParams(
        sigma=sigma,
        corr=None if corr is None else np.asarray(corr, dtype=float),
        dt_block=float(block.get("dt_block_days", stochastic.DEFAULT_DT_BLOCK)),
        price_model=_price_model(block.get("price_model")),
    )


def _fee(cfg) -> fees.FeeParams:
    block = cfg.get("fee") or {}
    if "gamma" not in block:
        raise ValueError("missing fee.gamma (flag --gamma or config)")
    return fees.FeeParams(
        gamma=float(block["gamma"]),
        phi=float(block.get("phi", 1.0)),
        pool_value=float(block.get("pool_value", 1.0)),
    )


def _trajectory(cfg) -> interpolate.Trajectory:
    ws, we = _weights(cfg, "w_start"), _weights(cfg, "w_end")
    method = cfg.get("method", "slerp")
    if method == "bisection":
        if "depth" not in cfg:
            raise ValueError("bisection needs --depth")
        if "f" in cfg and cfg["f"] is not None:
            raise ValueError("give exactly one of --f and --depth")
        return interpolate.bisection_path(ws, we, int(cfg["depth"]))
    if "f" not in cfg or cfg["f"] is None:
        raise ValueError("missing step count --f")
    if "depth" in cfg and cfg["depth"] is not None:
        raise ValueError("give exactly one of --f and --depth")
    return interpolate.make_path(method, ws, we, int(cfg["f"]))


# ---------------------------------------------------------------------------
# subcommands


def cmd_plan(args) -> int:
    cfg = load_config(args)
    traj = _trajectory(cfg)
    omega = geodesic_angle(traj.start, traj.end)
    columns = ["step"] + [f"w_{i}" for i in range(traj.n)]
    rows = [[k, *traj.points[k]] for k in range(traj.f + 1)]
    summary = {
        "omega": omega,
        "per_step_angle": omega / traj.f,
        "analytic_total": costs.analytic_slerp_cost(omega, traj.f),
        "f": traj.f,
        "method": traj.method,
    }
    _emit(args, columns, rows, summary)
    return 0


def cmd_cost(args) -> int:
    cfg = load_config(args)
    methods = cfg.get("methods", ["linear", "geometric", "amgm", "slerp"])
    if isinstance(methods, str):
        methods = [m for m in methods.split(",") if m.strip()]
    if not methods:
        raise ValueError("method list is empty")
    kernel = LossKernel(cfg.get("kernel", "exact_kl"))
    ws, we = _weights(cfg, "w_start"), _weights(cfg, "w_end")
    f = int(cfg.get("f") or 0)
    if f < 1:
        raise ValueError("missing step count --f")
    reports = {}
    for method in methods:
        traj = interpolate.make_path(method, ws, we, f)
        reports[method] = costs.evaluate_trajectory(traj, kernel)
    columns = ["step"] + list(methods)
    rows = [[k + 1, *[reports[m].per_step[k] for m in methods]] for k in range(f)]
    summary = {
        "kernel": kernel.value,
        "f": f,
        "per_method": {
            m: {
                "total": r.total,
                "retained_fraction": r.retained_fraction,
                "std_over_mean": r.std_over_mean,
            }
            for m, r in reports.items()
        },
    }
    _emit(args, columns, rows, summary)
    return 0


def cmd_steps(args) -> int:
    cfg = load_config(args)
    ws, we = _weights(cfg, "w_start"), _weights(cfg, "w_end")
    market = _market(cfg, ws.n)
    fee = _fee(cfg)
    u_max = float(cfg.get("u_max", 0.05))
    omega = geodesic_angle(ws, we)
    mean_lvr = stochastic.mean_lvr_along_path(ws, we, market)
    w_min = float(min(ws.w.min(), we.w.min()))
    sigma_eff = float(np.max(market.sigma))
    thr_worst = fees.f_threshold(omega, w_min, fee.gamma, "worst_case")
    thr_typical = fees.f_threshold(omega, w_min, fee.gamma, "typical", n_tokens=ws.n)
    nu = fees.price_arb_rate(sigma_eff, market.dt_block, fee.gamma)
    report: dict = {
        "omega": omega,
        "mean_lvr_per_day": mean_lvr,
        "w_min": w_min,
        "f_threshold_worst": thr_worst,
        "f_threshold_typical": thr_typical,
        "nu": nu,
        "blocks_per_price_arb": (1.0 / nu) if nu > 0 else None,
        "phi": fee.phi,
        "guardrail_speed_ratio": dynamics.guardrail_ratio(sigma_eff, market.dt_block, u_max),
    }
    if mean_lvr > 0.0:
        opt = stochastic.optimal_step_count(omega, mean_lvr, market.dt_block)
        f_phi = fees.fee_adjusted_optimal_f(omega, mean_lvr, market.dt_block, fee, thr_worst)
        delta = dynamics.boundary_layer_width(opt.f_star, opt.f_star * market.dt_block, sigma_eff)
        report.update(
            {
                "regime": "lvr_tradeoff",
                "f_star": opt.f_star,
                "cost_at_f_star": opt.cost,
                "lambda_star": stochastic.lambda_star(sigma_eff, mean_lvr),
                "n_tooth": fees.sawtooth_blocks(opt.f_star, thr_worst),
                "f_star_phi": f_phi,
                "boundary_layer_width": None if math.isinf(delta) else delta,
            }
        )
    else:
        report.update(
            {
                "regime": "constant_price",
                "f_star": None,
                "cost_at_f_star": None,
                "lambda_star": None,
                "n_tooth": None,
                "f_star_phi": None,
                "boundary_layer_width": None,
            }
        )
    text = render_json(report) + "\n"
    if args.out:
        with open(args.out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args)
    ws, we = _weights(cfg, "w_start"), _weights(cfg, "w_end")
    market = _market(cfg, ws.n)
    method = cfg.get("method", "slerp")
    n_paths = int(cfg.get("n_paths", 2000))
    seed = int(cfg.get("seed", 0))
    omega = geodesic_angle(ws, we)
    mean_lvr = stochastic.mean_lvr_along_path(ws, we, market)
    grid = cfg.get("f_grid")
    if grid is None:
        if mean_lvr <= 0.0:
            raise ValueError("an explicit f_grid is required when the mean LVR is zero")
        f_star = stochastic.optimal_step_count(omega, mean_lvr, market.dt_block).f_star
        grid = [max(1, round(f_star * c)) for c in (0.25, 0.5, 1.0, 2.0, 4.0)]
    grid = [int(f) for f in grid]
    rows = []
    for f in grid:
        sim = stochastic.monte_carlo_cost(ws, we, f, method, market, n_paths, seed)
        ana = stochastic.analytic_cost(f, omega, mean_lvr, market.dt_block)
        rows.append([f, sim.mean_log_loss, sim.ci95_halfwidth, ana.total])
    if args.paths_out:
        path = stochastic.sample_paths(market, max(grid), 1, seed)[0]
        stochastic.write_price_csv(args.paths_out, path)
    summary = {
        "omega": omega,
        "mean_lvr_per_day": mean_lvr,
        "n_paths": n_paths,
        "seed": seed,
        "method": method,
    }
    _emit(args, ["f", "mc_mean", "ci95", "analytic"], rows, summary)
    return 0


_OBJECTIVES = ("exact_kl", "kl_plus_lvr", "jacobi")


def cmd_optimize(args) -> int:
    cfg = load_config(args)
    ws, we = _weights(cfg, "w_start"), _weights(cfg, "w_end")
    f = int(cfg.get("f") or 0)
    if f < 1:
        raise ValueError("missing step count --f")
    name = cfg.get("objective", "exact_kl")
    if name not in _OBJECTIVES:
        raise ValueError(f"unknown objective {name!r}")
    if name == "exact_kl":
        objective = optimize.ExactKlObjective()
    else:
        market = _market(cfg, ws.n)
        if name == "kl_plus_lvr":
            horizon = cfg.get("horizon_days")
            objective = optimize.KlPlusLvrObjective(market, None if horizon is None else float(horizon))
        else:
            objective = optimize.JacobiObjective(market)
    init = interpolate.make_path(cfg.get("method", "slerp"), ws, we, f)
    result = optimize.optimize_path(
        ws,
        we,
        f,
        objective=objective,
        init=init,
        tol=float(cfg.get("tol", 1e-10)),
        max_iter=int(cfg.get("max_iter", 5000)),
        w_floor=float(cfg.get("w_floor", CLI_W_FLOOR)),
        method=cfg.get("optimizer", "pgd"),
    )
    init_value = optimize.objective_value(init, objective)
    columns = ["step"] + [f"w_{i}" for i in range(result.trajectory.n)]
    rows = [[k, *result.trajectory.points[k]] for k in range(f + 1)]
    summary = {
        "objective": name,
        "objective_init": init_value,
        "objective_final": result.objective_value,
        "improvement": result.improvement_vs_init,
        "iterations": result.iterations,
        "converged": result.converged,
        "max_abs_deviation_from_init": float(np.max(np.abs(result.trajectory.points - init.points))),
    }
    _emit(args, columns, rows, summary)
    return 0


def cmd_pendulum(args) -> int:
    cfg = load_config(args)
    if "mu" in cfg and cfg["mu"] is not None:
        mu = float(cfg["mu"])
    else:
        ws = _weights(cfg, "w_start")
        market = _market(cfg, ws.n)
        f = int(cfg.get("f") or 0)
        if f < 1:
            raise ValueError("pendulum needs --mu, or --f plus a market block")
        sigma_eff = float(np.max(market.sigma))
        mu = f * (f * market.dt_block) * sigma_eff**2 / 16.0
    if "theta_start" in cfg:
        th0, th1 = float(cfg["theta_start"]), float(cfg["theta_end"])
    else:
        ws, we = _weights(cfg, "w_start"), _weights(cfg, "w_end")
        if ws.n != 2:
            raise ValueError("angle endpoints require a two-token pool")
        th0 = float(np.arcsin(np.sqrt(ws.w[0])))
        th1 = float(np.arcsin(np.sqrt(we.w[0])))
    grid = int(cfg.get("grid", 512))
    sol = dynamics.solve_pendulum(th0, th1, mu, m_intervals=grid)
    omega = th1 - th0
    affine = th0 + omega * sol.s
    corrected = affine + dynamics.greens_correction(th0, omega, mu, sol.s)
    rows = [
        [sol.s[i], sol.theta[i], corrected[i], float(np.sin(sol.theta[i]) ** 2)]
        for i in range(sol.s.size)
    ]
    summary = {
        "mu": mu,
        "residual_norm": sol.residual_norm,
        "max_deviation_from_affine": float(np.max(np.abs(sol.theta - affine))),
    }
    _emit(args, ["s", "theta_bvp", "theta_affine_plus_correction", "w_volatile"], rows, summary)
    return 0


def cmd_replay(args) -> int:
    cfg = load_config(args)
    traj = _trajectory(cfg)
    outcome = stochastic.replay_rebalance(traj, args.prices, ordering=cfg.get("ordering", "simultaneous"))
    cum = np.cumsum(outcome.per_step_rebalance + outcome.per_step_price)
    rows = [
        [k + 1, -outcome.per_step_rebalance[k], outcome.per_step_price[k], cum[k]]
        for k in range(traj.f)
    ]
    summary = {
        "log_value_change": outcome.log_value_change,
        "rebalance_log": outcome.rebalance_log,
        "price_log": outcome.price_log,
        "retained_fraction_rebalance_only": float(np.exp(outcome.rebalance_log)),
    }
    _emit(args, ["step", "kl_loss", "price_term", "cum_log_value"], rows, summary)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rebal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config document")
        p.add_argument("--seed", type=int, help="RNG seed (64-bit)")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--w-start", dest="w_start", help="comma-separated start weights")
        p.add_argument("--w-end", dest="w_end", help="comma-separated end weights")
        p.add_argument("--w-floor", dest="w_floor", type=float, help="minimum weight (default 0.01)")
        p.add_argument("--f", type=int, help="number of interpolation steps")
        p.add_argument("--depth", type=int, help="bisection depth (f = 2**depth)")
        p.add_argument("--method", help="trajectory method")
        p.add_argument("--kernel", help="loss kernel: exact_kl | quadratic | pade")
        p.add_argument("--sigma", help="comma-separated per-asset volatilities")
        p.add_argument("--sigma-units", dest="sigma_units", choices=("annual", "daily"))
        p.add_argument("--dt-block-days", dest="dt_block_days", type=float)
        p.add_argument("--gamma", type=float, help="fee retention factor")
        p.add_argument("--phi", type=float, help="net cost-of-carry fraction")

    p = sub.add_parser("plan", help="write an interpolation trajectory")
    common(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("cost", help="per-step losses for one or more methods")
    common(p)
    p.add_argument("--methods", help="comma-separated method list")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("steps", help="step-count report (thresholds, optima)")
    common(p)
    p.set_defaults(func=cmd_steps)

    p = sub.add_parser("simulate", help="Monte-Carlo cost over a step-count grid")
    common(p)
    p.add_argument("--n-paths", dest="n_paths", type=int)
    p.add_argument("--paths-out", dest="paths_out", help="also write one sampled price path CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="optimise interior trajectory points")
    common(p)
    p.add_argument("--objective", choices=_OBJECTIVES)
    p.add_argument("--optimizer", choices=("pgd", "lbfgsb"))
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--horizon-days", dest="horizon_days", type=float)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("pendulum", help="two-token boundary-value trajectory")
    common(p)
    p.add_argument("--mu", type=float, help="forcing strength")
    p.add_argument("--grid", type=int, help="grid intervals (default 512)")
    p.set_defaults(func=cmd_pendulum)

    p = sub.add_parser("replay", help="replay a trajectory against a price CSV")
    common(p)
    p.add_argument("--prices", required=True, help="price CSV (block,asset_0,...)")
    p.add_argument("--ordering", choices=stochastic.ORDERINGS)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (dynamics.ConvergenceError, FloatingPointError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
