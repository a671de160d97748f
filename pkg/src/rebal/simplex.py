"""Core geometry of the pool weight simplex.

Pool weights are points on the open probability simplex. Taking square
roots (the Hellinger map) puts them on the positive orthant of the unit
sphere, where the rebalancing-cost geometry is round; everything downstream
builds on the closed forms collected here: KL loss, the retention ratio
left after arbitrage, small-step loss kernels, the geodesic angle between
two weight vectors, and a Lambert W evaluator.

All losses are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Raw construction inputs may be off simplex by this much before we refuse to
# renormalise (interpolation arithmetic drifts at the 1e-15 level only).
RAW_SUM_TOL = 1e-6

_INV_E = np.exp(-1.0)


class LossKernel(str, Enum):
    """Per-step loss kernels accepted by every cost routine."""

    EXACT_KL = "exact_kl"
    QUADRATIC = "quadratic"
    PADE = "pade"


_KERNEL_CODES = {LossKernel.EXACT_KL: 0, LossKernel.QUADRATIC: 1, LossKernel.PADE: 2}


def kernel_code(kind: LossKernel | str) -> int:
    """Integer code of a loss kernel, for the compiled kernels."""
    return _KERNEL_CODES[LossKernel(kind)]


@dataclass(frozen=True)
class WeightVector:
    """A point on the open weight simplex.

    Construction renormalises the input (divide by the sum) but rejects raw
    input whose sum deviates from 1 by more than ``RAW_SUM_TOL``. A minimum
    weight ``w_floor`` can be enforced; deployed pools use 0.01, the library
    default is the open simplex (strictly positive weights only).
    """

    w: np.ndarray
    w_floor: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("weights must be a 1-d sequence with at least 2 entries")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        s = float(w.sum())
        if abs(s - 1.0) > RAW_SUM_TOL:
            raise ValueError(f"weights sum to {s!r}, expected 1 within {RAW_SUM_TOL}")
        w = w / s
        if np.any(w <= 0.0):
            raise ValueError("weights must be strictly positive")
        if self.w_floor > 0.0 and np.any(w < self.w_floor - 1e-12):
            raise ValueError(f"weight below floor {self.w_floor}: {w.min()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.w.size


@dataclass(frozen=True)
class HellingerPoint:
    """Square-root coordinates: a point on the positive orthant of the unit sphere."""

    eta: np.ndarray

    def __post_init__(self):
        eta = np.array(self.eta, dtype=np.float64)
        if eta.ndim != 1 or eta.size < 2:
            raise ValueError("coordinates must be a 1-d sequence with at least 2 entries")
        if np.any(eta < 0.0):
            raise ValueError("coordinates must be non-negative")
        if abs(float(eta @ eta) - 1.0) > 1e-12:
            raise ValueError("coordinates must have unit Euclidean norm")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @property
    def n(self) -> int:
        return self.eta.size


def as_weights(w, w_floor: float = 0.0) -> np.ndarray:
    """Coerce a WeightVector or array-like to a validated weight array."""
    if isinstance(w, WeightVector):
        return w.w
    return WeightVector(np.asarray(w, dtype=np.float64), w_floor=w_floor).w


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p, q = as_weights(p), as_weights(q)
    if p.size != q.size:
        raise ValueError(f"dimension mismatch: {p.size} vs {q.size}")
    return p, q


def hellinger_embed(w) -> HellingerPoint:
    """Map weights to sphere coordinates, component-wise square root."""
    return HellingerPoint(np.sqrt(as_weights(w)))


def hellinger_unembed(eta) -> WeightVector:
    """Map sphere coordinates back to weights, component-wise square."""
    if not isinstance(eta, HellingerPoint):
        eta = HellingerPoint(np.asarray(eta, dtype=np.float64))
    return WeightVector(eta.eta**2)


def kl_divergence(p, q) -> float:
    """KL divergence sum(p_i log(p_i/q_i)) in nats; zero iff p == q."""
    p, q = _pair(p, q)
    return float(np.sum(p * np.log(p / q)))


def retention_ratio(w_start, w_end) -> float:
    """Fraction of pool value kept after arbitrage of a weight change.

    Computed as the product of component ratios raised to the new weights,
    prod((w_start_i / w_end_i) ** w_end_i); always in (0, 1], and equals
    exp(-kl_divergence(w_end, w_start)).
    """
    ws, we = _pair(w_start, w_end)
    return float(np.prod((ws / we) ** we))


def arbitraged_reserves(r_start, w_start, w_end) -> np.ndarray:
    """Post-arbitrage reserves after a weight change at constant prices."""
    r = np.asarray(r_start, dtype=np.float64)
    ws, we = _pair(w_start, w_end)
    if r.shape != ws.shape:
        raise ValueError("reserves must match the weight dimension")
    if np.any(r <= 0.0):
        raise ValueError("reserves must be strictly positive")
    return r * (we / ws) * retention_ratio(ws, we)


def component_loss_exact(u):
    """Per-component loss (1+u)log(1+u) - u of a relative weight change u."""
    u = np.asarray(u, dtype=np.float64)
    return (1.0 + u) * np.log1p(u) - u


def component_loss_quadratic(u):
    """Leading-order per-component loss u^2 / 2."""
    u = np.asarray(u, dtype=np.float64)
    return 0.5 * u * u


def component_loss_pade(u):
    """[1,1] Pade resummation (u^2/2)(1 + u/6)/(1 + u/2); exact through u^4."""
    u = np.asarray(u, dtype=np.float64)
    return 0.5 * u * u * (1.0 + u / 6.0) / (1.0 + 0.5 * u)


def loss_kernel(w_base, delta_w, kind: LossKernel | str = LossKernel.EXACT_KL) -> float:
    """Loss (nats) of moving from ``w_base`` by ``delta_w`` under one kernel.

    ``delta_w`` must sum to zero (the move stays on the simplex) and must
    keep every weight positive for the exact and Pade kernels.
    """
    kind = LossKernel(kind)
    w = as_weights(w_base)
    d = np.asarray(delta_w, dtype=np.float64)
    if d.shape != w.shape:
        raise ValueError("delta_w must match the weight dimension")
    if abs(float(d.sum())) > 1e-12:
        raise ValueError("delta_w must sum to zero")
    u = d / w
    if kind is not LossKernel.QUADRATIC and np.any(u <= -1.0):
        raise ValueError("relative change u <= -1 is outside the exact/Pade kernel domain")
    if kind is LossKernel.QUADRATIC:
        return float(np.sum(w * component_loss_quadratic(u)))
    if kind is LossKernel.PADE:
        return float(np.sum(w * component_loss_pade(u)))
    return kl_divergence(w + d, w)


def lambert_w0(x):
    """Principal branch of the Lambert W function, W exp(W) = x.

    Defined for x >= -1/e. Initial guess is log1p(x), switched to the
    square-root branch-point series near -1/e, then polished with Halley
    iterations (cap 50); the back-substitution residual is at the 1e-14
    relative level across the supported range.
    """
    x_arr = np.asarray(x, dtype=np.float64)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any(x_arr < -_INV_E - 1e-12):
        raise ValueError("lambert_w0 requires x >= -1/e")
    x_arr = np.maximum(x_arr, -_INV_E)

    near = x_arr < -0.25
    # branch-point series in p = sqrt(2 (e x + 1))
    p = np.sqrt(np.maximum(2.0 * (np.e * x_arr + 1.0), 0.0))
    w = np.where(near, -1.0 + p - p * p / 3.0 + 11.0 * p**3 / 72.0, np.log1p(x_arr))

    for _ in range(50):
        ew = np.exp(w)
        f = w * ew - x_arr
        wp1 = w + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        step = np.where(np.isfinite(step), step, 0.0)
        w = w - step
        if np.all(np.abs(step) <= 1e-16 * (1.0 + np.abs(w))):
            break
    w = np.maximum(w, -1.0)
    return float(w[0]) if scalar else w


def bhattacharyya_coefficient(w_start, w_end) -> float:
    """Overlap sum(sqrt(w_start_i * w_end_i)); the cosine of the geodesic angle."""
    ws, we = _pair(w_start, w_end)
    return float(np.sum(np.sqrt(ws * we)))


def geodesic_angle(w_start, w_end) -> float:
    """Geodesic angle between two weight vectors on the Hellinger sphere.

    For nearly identical inputs the overlap rounds to 1 and arccos loses all
    precision, so above 1 - 1e-12 the small-angle identity
    sqrt(2 (1 - overlap)) is used instead (with the overlap clamped to 1).
    """
    bc = bhattacharyya_coefficient(w_start, w_end)
    if bc > 1.0 - 1e-12:
        return float(np.sqrt(2.0 * max(0.0, 1.0 - min(bc, 1.0))))
    return float(np.arccos(bc))
