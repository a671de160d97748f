"""Trajectory cost evaluation under constant prices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .interpolate import Trajectory
from .simplex import LossKernel, kernel_code


@dataclass(frozen=True)
class CostReport:
    """Per-step losses (nats) of a trajectory plus summary statistics."""

    per_step: np.ndarray
    total: float
    std_over_mean: float
    retained_fraction: float


def evaluate_trajectory(trajectory: Trajectory, kind: LossKernel | str = LossKernel.EXACT_KL) -> CostReport:
    """Evaluate the per-step losses of a trajectory under one loss kernel.

    The exact kernel charges step k the KL divergence of the new weights
    against the old ones; the quadratic and Pade kernels expand around the
    old weights. ``std_over_mean`` is the population ratio (0 for a
    constant trajectory) and ``retained_fraction`` is exp(-total).
    """
    per_step = kernels.step_losses(trajectory.points, kernel_code(kind))
    total = float(np.sum(per_step))
    mean = total / per_step.size
    std = float(np.std(per_step))
    return CostReport(
        per_step=per_step,
        total=total,
        std_over_mean=std / mean if mean > 0.0 else 0.0,
        retained_fraction=float(np.exp(-total)),
    )


def analytic_slerp_cost(omega: float, f: int) -> float:
    """Closed-form total quadratic loss 2 omega^2 / f of an f-step geodesic."""
    if f < 1:
        raise ValueError("step count f must be >= 1")
    return 2.0 * omega * omega / f


def suboptimality_bound(omega: float, f: int, n_tokens: int, eps: float) -> float:
    """Upper bound on the exact-KL gap between the geodesic and the optimum.

    Returns (86 N / eps^4) omega^4 / f^3, valid for weights bounded below by
    ``eps`` and f >= 4 omega / eps. The constant is conservative; observed
    gaps are orders of magnitude smaller.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if f < 4.0 * omega / eps:
        raise ValueError("the bound requires f >= 4 omega / eps")
    a = 86.0 * n_tokens / eps**4
    return a * omega**4 / f**3
