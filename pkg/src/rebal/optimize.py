"""Brute-force numerical optimisation of all interior trajectory points.

The optimiser is a deterministic projected gradient descent with Armijo
backtracking and an exact sort-based Euclidean projection onto the floored
simplex; ``method="lbfgsb"`` offers a bound-constrained quasi-Newton
refinement behind the same interface (it eliminates one weight coordinate
per point, so the floor on that coordinate is checked after the fact).
It serves as the oracle against which the closed-form geodesic trajectories
are validated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .interpolate import Trajectory, slerp_path
from .simplex import as_weights
from .stochastic import MarketParams


@dataclass(frozen=True)
class ExactKlObjective:
    """Total exact KL cost of the trajectory."""


@dataclass(frozen=True)
class KlPlusLvrObjective:
    """Exact KL cost plus accumulated LVR exposure.

    Each of the f steps adds dt * lvr_rate at its new weights, where dt is
    the block interval, or horizon_days / f when a horizon is given.
    """

    market: MarketParams
    horizon_days: float | None = None


@dataclass(frozen=True)
class JacobiObjective:
    """Conformal path length: per-step arc length times sqrt(2 dt lvr).

    Minimising it optimises path and traversal speed jointly; the speed is
    then read off as sqrt(2 dt lvr) pointwise.
    """

    market: MarketParams


PathObjective = ExactKlObjective | KlPlusLvrObjective | JacobiObjective


@dataclass(frozen=True)
class OptimizeResult:
    trajectory: Trajectory
    objective_value: float
    iterations: int
    converged: bool
    improvement_vs_init: float


def _lvr_terms(points: np.ndarray, m: MarketParams):
    sig2 = m.sigma**2
    cov = m.cov
    ell = 0.5 * (points @ sig2 - np.einsum("ki,ij,kj->k", points, cov, points))
    grad = 0.5 * sig2 - points @ cov
    return ell, grad


def _value_and_grad(points: np.ndarray, objective: PathObjective):
    """Objective value and its gradient with respect to interior points."""
    if isinstance(objective, ExactKlObjective):
        return kernels.kl_total_and_interior_grad(points)

    if isinstance(objective, KlPlusLvrObjective):
        total, grad = kernels.kl_total_and_interior_grad(points)
        m = objective.market
        f = points.shape[0] - 1
        dt = m.dt_block if objective.horizon_days is None else objective.horizon_days / f
        ell, ell_grad = _lvr_terms(points[1:], m)
        total += dt * float(np.sum(ell))
        grad = grad + dt * ell_grad[:-1]
        return total, grad

    if isinstance(objective, JacobiObjective):
        m = objective.market
        dt = m.dt_block
        ell, ell_grad = _lvr_terms(points, m)
        eta = np.sqrt(points)
        b = np.clip(np.sum(eta[1:] * eta[:-1], axis=1), -1.0, 1.0 - 1e-15)
        ds = 2.0 * np.arccos(b)
        c = np.sqrt(np.maximum(dt * (ell[1:] + ell[:-1]), 0.0))
        total = float(np.sum(ds * c))
        # d ds_k / d w_j : step k joins points k-1 and k
        dacos = -1.0 / np.sqrt(1.0 - b * b)
        db_dnew = 0.5 * eta[:-1] / eta[1:]
        db_dold = 0.5 * eta[1:] / eta[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            dc = np.where(c > 0.0, dt / (2.0 * c), 0.0)
        grad = np.zeros_like(points)
        grad[1:] += (2.0 * dacos * c)[:, None] * db_dnew + (ds * dc)[:, None] * ell_grad[1:]
        grad[:-1] += (2.0 * dacos * c)[:, None] * db_dold + (ds * dc)[:, None] * ell_grad[:-1]
        return total, grad[1:-1]

    raise TypeError(f"unknown objective {objective!r}")


def objective_value(trajectory_or_points, objective: PathObjective = ExactKlObjective()) -> float:
    pts = _points_of(trajectory_or_points)
    return float(_value_and_grad(pts, objective)[0])


def objective_gradient(trajectory_or_points, objective: PathObjective = ExactKlObjective()) -> np.ndarray:
    """Gradient of the objective with respect to the f-1 interior points."""
    pts = _points_of(trajectory_or_points)
    return np.asarray(_value_and_grad(pts, objective)[1])


def _points_of(trajectory_or_points) -> np.ndarray:
    if isinstance(trajectory_or_points, Trajectory):
        return trajectory_or_points.points
    return np.asarray(trajectory_or_points, dtype=np.float64)


def project_rows_to_simplex(rows: np.ndarray, w_floor: float = 0.0) -> np.ndarray:
    """Exact Euclidean projection of each row onto {w >= w_floor, sum w = 1}."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    n = rows.shape[1]
    budget = 1.0 - n * w_floor
    if budget <= 0.0:
        raise ValueError("w_floor leaves no simplex volume")
    v = rows - w_floor
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - budget
    idx = np.arange(1, n + 1)
    rho = np.sum(u - css / idx > 0.0, axis=1) - 1
    tau = css[np.arange(rows.shape[0]), rho] / (rho + 1)
    return np.maximum(v - tau[:, None], 0.0) + w_floor


def optimize_path(
    w_start,
    w_end,
    f: int,
    objective: PathObjective = ExactKlObjective(),
    init: Trajectory | None = None,
    tol: float = 1e-10,
    max_iter: int = 5000,
    w_floor: float = 0.0,
    method: str = "pgd",
) -> OptimizeResult:
    """Minimise the objective over the f-1 interior weight vectors.

    Endpoints stay fixed; every interior point is constrained to the simplex
    with the given floor. ``init`` defaults to the SLERP trajectory and must
    match the endpoints, the step count and the floor. Convergence is
    declared when the norm of the unit-step projected-gradient map drops
    below ``tol``. The search direction, line search and projection are all
    deterministic, so identical inputs give identical results.
    """
    ws, we = as_weights(w_start), as_weights(w_end)
    f = int(f)
    if f < 1:
        raise ValueError("step count f must be >= 1")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if init is None:
        init = slerp_path(ws, we, f)
    if init.f != f or init.n != ws.size:
        raise ValueError("init trajectory shape does not match the problem")
    if np.max(np.abs(init.start - ws)) > 1e-12 or np.max(np.abs(init.end - we)) > 1e-12:
        raise ValueError("init trajectory endpoints do not match")
    if f > 1 and np.min(init.points[1:-1]) < w_floor - 1e-12:
        raise ValueError("init trajectory violates the weight floor")

    w0 = init.points.copy()
    v_init, _ = _value_and_grad(w0, objective)
    if not np.isfinite(v_init):
        raise FloatingPointError("objective is not finite at the initial trajectory")
    if f == 1:
        traj = Trajectory(w0, "custom")
        return OptimizeResult(traj, float(v_init), 0, True, 0.0)

    if method == "lbfgsb":
        pts, value, iters, ok = _lbfgsb(w0, objective, tol, max_iter, w_floor)
    elif method == "pgd":
        pts, value, iters, ok = _pgd(w0, objective, tol, max_iter, w_floor)
    else:
        raise ValueError(f"unknown optimiser method {method!r}")

    if not np.isfinite(value):
        raise FloatingPointError("objective became non-finite during optimisation")
    traj = Trajectory(pts, "custom")
    return OptimizeResult(
        trajectory=traj,
        objective_value=float(value),
        iterations=iters,
        converged=ok,
        improvement_vs_init=float(v_init - value),
    )


def _pgd(points, objective, tol, max_iter, w_floor):
    w = points
    value, grad = _value_and_grad(w, objective)
    step = 1.0
    for it in range(1, max_iter + 1):
        # unit-step gradient map decides convergence
        ref = project_rows_to_simplex(w[1:-1] - grad, w_floor)
        pg_norm = float(np.linalg.norm(w[1:-1] - ref))
        if pg_norm <= tol:
            return w, value, it - 1, True
        accepted = False
        while step > 1e-18:
            trial = w.copy()
            trial[1:-1] = project_rows_to_simplex(w[1:-1] - step * grad, w_floor)
            decrease = float(np.sum(grad * (w[1:-1] - trial[1:-1])))
            # a trial projected onto the simplex boundary has infinite KL
            # cost and is rejected below; silence the expected log-of-zero
            with np.errstate(divide="ignore", invalid="ignore"):
                v_new, g_new = _value_and_grad(trial, objective)
            if np.isfinite(v_new) and v_new <= value - 1e-4 * decrease:
                w, value, grad = trial, v_new, g_new
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no further float-representable progress
            return w, value, it, False
        step = min(step * 2.0, 1e6)
    return w, value, max_iter, False


def _lbfgsb(points, objective, tol, max_iter, w_floor):
    from scipy.optimize import minimize

    n = points.shape[1]
    interior0 = points[1:-1, : n - 1]

    def unpack(x):
        w = points.copy()
        w[1:-1, : n - 1] = x.reshape(-1, n - 1)
        w[1:-1, n - 1] = 1.0 - w[1:-1, : n - 1].sum(axis=1)
        return w

    def fun(x):
        w = unpack(x)
        if np.any(w[1:-1, n - 1] <= 0.0):
            return np.inf, np.zeros_like(x)
        value, grad = _value_and_grad(w, objective)
        reduced = grad[:, : n - 1] - grad[:, n - 1 : n]
        return value, reduced.ravel()

    hi = 1.0 - (n - 1) * w_floor
    res = minimize(
        fun,
        interior0.ravel(),
        jac=True,
        method="L-BFGS-B",
        bounds=[(w_floor, hi)] * interior0.size,
        options={"maxiter": max_iter, "ftol": 1e-18, "gtol": tol, "maxls": 60},
    )
    w = unpack(res.x)
    # the eliminated coordinate has no explicit bound; fall back if it broke
    if np.min(w[1:-1, n - 1]) < w_floor - 1e-12:
        return _pgd(points, objective, tol, max_iter, w_floor)
    value, _ = _value_and_grad(w, objective)
    v0, _ = _value_and_grad(points, objective)
    if value > v0:
        return points, v0, int(res.nit), False
    return w, value, int(res.nit), bool(res.success)
