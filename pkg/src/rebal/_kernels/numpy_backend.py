"""Reference numpy implementations of the hot-loop kernels."""

from __future__ import annotations

import numpy as np

KIND_EXACT = 0
KIND_QUADRATIC = 1
KIND_PADE = 2


def step_losses(points, kind):
    """Per-step rebalancing losses (nats) along a weight trajectory.

    ``points`` is the (f+1, N) trajectory; step k runs from row k to row k+1.
    ``kind`` selects the kernel: 0 exact KL of new weights against old,
    1 quadratic form at the old weights, 2 Pade-resummed quadratic.
    """
    p = np.asarray(points, dtype=np.float64)
    new, old = p[1:], p[:-1]
    if kind == KIND_EXACT:
        return np.sum(new * np.log(new / old), axis=1)
    d = new - old
    if kind == KIND_QUADRATIC:
        return np.sum(d * d / (2.0 * old), axis=1)
    if kind == KIND_PADE:
        u = d / old
        per = 0.5 * u * u * (1.0 + u / 6.0) / (1.0 + 0.5 * u)
        return np.sum(old * per, axis=1)
    raise ValueError(f"unknown kernel kind {kind!r}")


def kl_total_and_interior_grad(points):
    """Total exact-KL cost of a trajectory and its gradient.

    Returns ``(total, grad)`` where ``grad`` has shape (f-1, N): row j is the
    derivative of the total with respect to interior point j+1. Endpoints are
    fixed and carry no gradient rows.
    """
    p = np.asarray(points, dtype=np.float64)
    new, old = p[1:], p[:-1]
    r = new / old
    logr = np.log(r)
    total = float(np.sum(new * logr))
    # interior point j appears as "new" in step j (log term) and as "old"
    # in step j+1 (ratio term)
    grad = (logr[:-1] + 1.0) - r[1:]
    return total, grad


def weighted_logret_totals(step_weights, log_prices):
    """Sum of weighted log price returns per path.

    ``step_weights`` is (f, N): the exponent weights applied on each step.
    ``log_prices`` is (P, f+1, N). Returns a (P,) array with
    ``sum_k sum_i step_weights[k, i] * (log_prices[p, k+1, i] - log_prices[p, k, i])``.
    """
    w = np.asarray(step_weights, dtype=np.float64)
    lp = np.asarray(log_prices, dtype=np.float64)
    d = np.diff(lp, axis=1)
    return np.einsum("pfn,fn->p", d, w)


def garch_log_returns(z, h0, omega, alpha, beta):
    """Driftless GARCH(1,1) per-block log returns for one asset.

    ``z`` is (P, B) standard-normal innovations. The conditional variance h
    starts at ``h0`` and recurses on the realised innovation; each block's
    log return is ``-h/2 + sqrt(h) * z`` so the price is a per-block
    martingale.
    """
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    h = np.full(z.shape[0], float(h0))
    for k in range(z.shape[1]):
        eps = np.sqrt(h) * z[:, k]
        out[:, k] = -0.5 * h + eps
        h = omega + alpha * eps * eps + beta * h
    return out
