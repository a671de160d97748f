"""Fee-band economics: thresholds, arb cadence, revenue and adjusted costs.

A swap fee gamma creates a no-arbitrage band around the pool price. Below
``f_threshold`` steps each weight update breaches the band on its own;
above it the updates are absorbed until drift accumulates, which plateaus
the rebalancing cost. The net cost-of-carry fraction phi folds fee revenue,
arber under-extraction and incidental routing into one empirical number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .simplex import as_weights


@dataclass(frozen=True)
class FeeParams:
    """Fee retention factor, net cost-of-carry fraction and pool value."""

    gamma: float
    phi: float = 1.0
    pool_value: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.pool_value <= 0.0:
            raise ValueError("pool value must be positive")


def f_threshold(omega: float, w_min: float, gamma: float, mode: str = "worst_case", n_tokens: int | None = None) -> float:
    """Step count above which per-step weight changes stay inside the fee band.

    Worst case charges the full per-step sphere displacement to one
    component; the typical mode spreads it across sqrt(N) coordinates and
    needs ``n_tokens``.
    """
    if omega < 0.0:
        raise ValueError("omega must be non-negative")
    if not 0.0 < w_min < 1.0:
        raise ValueError("w_min must lie in (0, 1)")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie strictly inside (0, 1)")
    if mode == "worst_case":
        return 4.0 * omega / (math.sqrt(w_min) * (1.0 - gamma))
    if mode == "typical":
        if n_tokens is None or n_tokens < 2:
            raise ValueError("typical mode needs the token count")
        return 4.0 * omega / (math.sqrt(n_tokens * w_min) * (1.0 - gamma))
    raise ValueError(f"unknown mode {mode!r}")


def price_arb_rate(sigma_daily: float, dt_block_days: float, gamma: float) -> float:
    """Fraction of blocks in which price moves alone trigger arbitrage."""
    if gamma >= 1.0:
        raise ValueError("gamma must be below 1")
    return sigma_daily**2 * dt_block_days / (1.0 - gamma) ** 2


def fee_revenue_total(w_start, w_end, fee: FeeParams) -> float:
    """Total fee revenue of a monotonic rebalance, endpoints only.

    ((1 - gamma) / (2 gamma)) V sum_i |dw_i|; per-step revenues telescope,
    so the interpolation path and step count drop out.
    """
    ws, we = as_weights(w_start), as_weights(w_end)
    if ws.size != we.size:
        raise ValueError("dimension mismatch")
    return (1.0 - fee.gamma) / (2.0 * fee.gamma) * fee.pool_value * float(np.sum(np.abs(we - ws)))


def fee_adjusted_cost(f: float, omega: float, mean_lvr: float, dt_block: float, fee: FeeParams, f_thr: float) -> float:
    """Cost with the rebalancing term plateaued at the fee-band threshold.

    2 omega^2 / min(f, f_thr) + f dt mean_lvr phi. Continuous in f at the
    threshold; for phi <= 0 it is non-increasing in f.
    """
    if f < 1:
        raise ValueError("step count f must be >= 1")
    if f_thr <= 0.0:
        raise ValueError("f_thr must be positive")
    return 2.0 * omega**2 / min(f, f_thr) + f * dt_block * mean_lvr * fee.phi


def fee_adjusted_optimal_f(omega: float, mean_lvr: float, dt_block: float, fee: FeeParams, f_thr: float) -> float | None:
    """Fee-adjusted optimal step count, capped at the band threshold.

    Returns None when phi <= 0: the adjusted cost never stops decreasing,
    so no finite optimum exists (use as many steps as operationally
    convenient).
    """
    if f_thr <= 0.0:
        raise ValueError("f_thr must be positive")
    if fee.phi <= 0.0:
        return None
    if mean_lvr <= 0.0:
        return None
    unconstrained = omega * math.sqrt(2.0 / (dt_block * mean_lvr * fee.phi))
    return min(unconstrained, f_thr)


def sawtooth_blocks(f: float, f_thr: float) -> float:
    """Blocks per weight-driven arb cycle when updates are band-absorbed."""
    if f_thr <= 0.0:
        raise ValueError("f_thr must be positive")
    return f / f_thr
