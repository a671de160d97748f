"""Two-token boundary-value dynamics and variable-speed diagnostics.

The two-token rebalance with one volatile asset reduces, in the angle
coordinate theta = arcsin(sqrt(w)), to the forced pendulum
theta'' = mu sin(4 theta) on s in [0, 1] with Dirichlet boundary values;
mu collects the LVR forcing strength. At mu = 0 the solution is the free
geodesic (affine theta). For small mu the deviation is captured in closed
form by the Green's-function correction, and this module cross-validates
the two routes. It also provides the variable-speed (conformal-metric)
cost diagnostics and the MEV guardrail speed ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .stochastic import MarketParams, mean_lvr_along_path, optimal_step_count, _lvr_profile, _simpson_mean
from .simplex import geodesic_angle, as_weights


class ConvergenceError(RuntimeError):
    """A Newton iteration failed to reach the requested residual."""


@dataclass(frozen=True)
class PendulumSolution:
    """Collocation solution theta(s) on a uniform grid with M intervals."""

    s: np.ndarray
    theta: np.ndarray
    mu: float
    residual_norm: float


def _newton_bvp(theta, mu, h, tol, max_newton):
    """Damped Newton on the central-difference collocation equations."""
    inv_h2 = 1.0 / (h * h)
    for _ in range(max_newton):
        res = (theta[:-2] - 2.0 * theta[1:-1] + theta[2:]) * inv_h2 - mu * np.sin(4.0 * theta[1:-1])
        rnorm = float(np.max(np.abs(res)))
        if rnorm <= tol:
            return theta, rnorm
        m = theta.size - 2
        band = np.zeros((3, m))
        band[0, 1:] = inv_h2
        band[1] = -2.0 * inv_h2 - 4.0 * mu * np.cos(4.0 * theta[1:-1])
        band[2, :-1] = inv_h2
        delta = solve_banded((1, 1), band, -res)
        lam = 1.0
        accepted = False
        while lam >= 1e-8:
            trial = theta.copy()
            trial[1:-1] += lam * delta
            tres = (trial[:-2] - 2.0 * trial[1:-1] + trial[2:]) * inv_h2 - mu * np.sin(4.0 * trial[1:-1])
            if float(np.max(np.abs(tres))) < rnorm:
                theta = trial
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            # no damped step improves: stagnation at the rounding floor is
            # convergence, anything further from tol is a genuine failure
            if rnorm <= 100.0 * tol:
                return theta, rnorm
            raise ConvergenceError(f"line search stalled at residual {rnorm:.3e} (mu {mu})")
        if float(np.max(np.abs(delta))) * lam <= 1e-13:
            res = (theta[:-2] - 2.0 * theta[1:-1] + theta[2:]) * inv_h2 - mu * np.sin(4.0 * theta[1:-1])
            return theta, float(np.max(np.abs(res)))
    res = (theta[:-2] - 2.0 * theta[1:-1] + theta[2:]) * inv_h2 - mu * np.sin(4.0 * theta[1:-1])
    rnorm = float(np.max(np.abs(res)))
    if rnorm > tol:
        raise ConvergenceError(f"Newton stalled at residual {rnorm:.3e} (tol {tol:.1e}, mu {mu})")
    return theta, rnorm


def solve_pendulum(
    theta_start: float,
    theta_end: float,
    mu: float,
    m_intervals: int = 512,
    tol: float = 1e-10,
    max_newton: int = 100,
) -> PendulumSolution:
    """Solve theta'' = mu sin(4 theta) with theta(0), theta(1) given.

    Second-order central differences on a uniform grid, damped Newton from
    the affine iterate. Strong forcing (mu > 1) is reached by continuation,
    doubling mu from 0.01, which keeps Newton on the connected solution
    branch through the bistable forcing.
    """
    for name, v in (("theta_start", theta_start), ("theta_end", theta_end)):
        if not 0.0 < v < math.pi / 2.0:
            raise ValueError(f"{name} must lie in (0, pi/2)")
    if m_intervals < 16:
        raise ValueError("need at least 16 grid intervals")
    if mu < 0.0:
        raise ValueError("mu must be non-negative")
    s = np.arange(m_intervals + 1) / m_intervals
    theta = theta_start + (theta_end - theta_start) * s
    h = 1.0 / m_intervals
    if mu == 0.0:
        return PendulumSolution(s=s, theta=theta, mu=0.0, residual_norm=0.0)
    stages = []
    if mu > 1.0:
        stage = 0.01
        while stage < mu:
            stages.append(stage)
            stage *= 2.0
    stages.append(mu)
    rnorm = math.inf
    for stage in stages:
        stage_tol = tol if stage == mu else max(tol, 1e-8)
        theta, rnorm = _newton_bvp(theta, stage, h, stage_tol, max_newton)
    theta.setflags(write=False)
    return PendulumSolution(s=s, theta=theta, mu=float(mu), residual_norm=rnorm)


def greens_correction(theta_start: float, omega: float, mu: float, s_grid) -> np.ndarray:
    """First-order deviation of the forced path from the affine baseline.

    Closed-form integral of the two-point boundary Green's function
    min(s, s') (1 - max(s, s')) against the forcing evaluated on the affine
    baseline theta_start + omega s'. Bounded by mu / 8 everywhere, zero at
    both endpoints, and pushes the path away from the equal-weight angle
    toward the nearer vertex.
    """
    s = np.asarray(s_grid, dtype=np.float64)
    a = 4.0 * theta_start
    b = 4.0 * omega
    if abs(b) < 1e-12:
        return -mu * math.sin(a) * 0.5 * s * (1.0 - s)

    def prim(x):  # antiderivative of x sin(a + b x)
        return -x * np.cos(a + b * x) / b + np.sin(a + b * x) / b**2

    i1 = (1.0 - s) * (prim(s) - prim(0.0))
    int_sin = (np.cos(a + b * s) - math.cos(a + b)) / b
    i2 = s * (int_sin - (prim(1.0) - prim(s)))
    return -mu * (i1 + i2)


def jacobi_speed_profile(w_start, w_end, m: MarketParams, s_grid) -> np.ndarray:
    """Cost-optimal traversal speed sqrt(2 dt lvr) along the geodesic path.

    Speeds are in Fisher-Rao arc length per block: fast through high-LVR
    stretches, slowing to zero toward a vertex.
    """
    s = np.asarray(s_grid, dtype=np.float64)
    from .interpolate import slerp_weights_at

    pts = slerp_weights_at(w_start, w_end, s)
    sig2 = m.sigma**2
    ell = 0.5 * (pts @ sig2 - np.einsum("si,ij,sj->s", pts, m.cov, pts))
    return np.sqrt(2.0 * m.dt_block * np.maximum(ell, 0.0))


@dataclass(frozen=True)
class JacobiCost:
    """Variable-speed cost against the constant-speed optimum."""

    variable_speed: float
    constant_speed: float
    saving: float


def jacobi_cost(w_start, w_end, m: MarketParams, n_intervals: int = 256) -> JacobiCost:
    """Minimum cost with speed freed along the geodesic path.

    The variable-speed cost integrates sqrt(2 dt lvr) over the Fisher-Rao
    arc length (total length 2 omega); the constant-speed benchmark is the
    analytic optimum at the path-averaged LVR. Equal when the LVR is
    constant along the path, and the gap widens near the simplex boundary.
    """
    ws, we = as_weights(w_start), as_weights(w_end)
    omega = geodesic_angle(ws, we)
    profile = np.maximum(_lvr_profile(ws, we, m, n_intervals), 0.0)
    mean_speed = _simpson_mean(np.sqrt(2.0 * m.dt_block * profile))
    variable = 2.0 * omega * mean_speed
    constant = optimal_step_count(omega, mean_lvr_along_path(ws, we, m, n_intervals), m.dt_block).cost
    return JacobiCost(
        variable_speed=variable,
        constant_speed=constant,
        saving=1.0 - variable / constant,
    )


def guardrail_ratio(sigma_daily: float, dt_block_days: float, u_max: float) -> float:
    """LVR-optimal speed over the per-block proportional-change guardrail.

    sigma sqrt(dt) / u_max; around 0.007 for mainnet parameters, so the
    cost-optimal traversal sits two orders of magnitude inside the guardrail.
    """
    if u_max <= 0.0:
        raise ValueError("u_max must be positive")
    if sigma_daily < 0.0 or dt_block_days <= 0.0:
        raise ValueError("need sigma >= 0 and dt_block > 0")
    return sigma_daily * math.sqrt(dt_block_days) / u_max


def boundary_layer_width(f: float, total_days: float, sigma_daily: float) -> float:
    """Perturbative-regime diagnostic 4 / sqrt(f T sigma^2); > 1 means the
    forcing correction stays small across the whole trajectory."""
    x = f * total_days * sigma_daily**2
    if x <= 0.0:
        return math.inf
    return 4.0 / math.sqrt(x)
