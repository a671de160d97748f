"""Price models, LVR, the cost/step-count tradeoff and pool-value simulation.

Volatilities are per square-root day throughout the library; block intervals
are in days. The CLI converts annualised figures by dividing by sqrt(365).

Sampling is counter-based: every path (or antithetic pair) owns a Philox
stream keyed by ``(seed, index)``, so results are bit-reproducible and
independent of how work is chunked or threaded.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from . import _kernels as kernels
from .interpolate import Trajectory, make_path, slerp_weights_at
from .simplex import as_weights, kernel_code

SECONDS_PER_DAY = 86400.0
DEFAULT_DT_BLOCK = 12.0 / SECONDS_PER_DAY  # 12-second blocks, in days


def to_daily_vol(sigma, units: str = "daily"):
    """Convert a volatility to per-sqrt(day) units ('daily' or 'annual')."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if units == "daily":
        out = sigma
    elif units == "annual":
        out = sigma / np.sqrt(365.0)
    else:
        raise ValueError(f"unknown volatility units {units!r}")
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Gbm:
    """Driftless geometric Brownian motion."""


@dataclass(frozen=True)
class MertonJump:
    """Driftless jump-diffusion: GBM plus compensated compound-Poisson jumps.

    Per asset, the diffusion variance is solved so that the total per-day
    variance sigma_diff^2 + jumps_per_day (jump_sigma^2 + jump_mean_log^2)
    matches the asset's target volatility. Zero-volatility assets stay
    constant and carry no jumps.
    """

    jumps_per_day: float
    jump_sigma: float
    jump_mean_log: float = 0.0

    def __post_init__(self):
        if self.jumps_per_day < 0.0 or self.jump_sigma < 0.0:
            raise ValueError("jump intensity and size must be non-negative")

    @property
    def jump_variance_per_day(self) -> float:
        return self.jumps_per_day * (self.jump_sigma**2 + self.jump_mean_log**2)


@dataclass(frozen=True)
class Garch11:
    """GARCH(1,1) conditional variance on per-block log returns.

    With ``omega=None`` (the default) each asset's omega is calibrated so
    the stationary variance omega / (1 - alpha - beta) equals its target
    per-block variance; an explicit omega applies to every asset as given.
    """

    alpha: float
    beta: float
    omega: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.alpha and 0.0 <= self.beta and self.alpha + self.beta < 1.0):
            raise ValueError("need alpha, beta >= 0 with alpha + beta < 1")
        if self.omega is not None and self.omega < 0.0:
            raise ValueError("omega must be non-negative")


PriceModel = Gbm | MertonJump | Garch11


@dataclass(frozen=True)
class MarketParams:
    """Volatilities (per sqrt day), correlations, block interval, price model."""

    sigma: np.ndarray
    corr: np.ndarray | None = None
    dt_block: float = DEFAULT_DT_BLOCK
    price_model: PriceModel = Gbm()

    def __post_init__(self):
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=np.float64))
        if np.any(sigma < 0.0) or not np.all(np.isfinite(sigma)):
            raise ValueError("volatilities must be finite and non-negative")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        if self.dt_block <= 0.0:
            raise ValueError("dt_block must be positive")
        n = sigma.size
        corr = self.corr
        if corr is None:
            corr = np.eye(n)
        corr = np.asarray(corr, dtype=np.float64)
        if corr.shape != (n, n):
            raise ValueError("correlation matrix shape must match sigma")
        if np.max(np.abs(corr - corr.T)) > 1e-12:
            raise ValueError("correlation matrix must be symmetric")
        if np.max(np.abs(np.diag(corr) - 1.0)) > 1e-12:
            raise ValueError("correlation matrix must have a unit diagonal")
        try:
            chol = np.linalg.cholesky(corr)
        except np.linalg.LinAlgError:
            raise ValueError("correlation matrix is not positive definite") from None
        corr.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "corr", corr)
        object.__setattr__(self, "_chol", chol)
        if isinstance(self.price_model, MertonJump):
            jv = self.price_model.jump_variance_per_day
            if np.any((sigma > 0.0) & (sigma**2 < jv - 1e-18)):
                raise ValueError("jump variance exceeds an asset's target variance")

    @property
    def n(self) -> int:
        return self.sigma.size

    @property
    def cov(self) -> np.ndarray:
        """Per-day covariance matrix sigma_i sigma_j rho_ij."""
        return self.corr * np.outer(self.sigma, self.sigma)


@dataclass(frozen=True)
class SimResult:
    """Monte-Carlo cost estimate with a normal-approximation 95% interval.

    ``mean_log_loss`` is the negative log of the sample-mean value ratio
    (the expected-value cost that the analytic tradeoff curve describes);
    ``mean_per_path_log_loss`` is the plain average of -log(V_T/V_0) and is
    reported for diagnostics.
    """

    mean_log_loss: float
    ci95_halfwidth: float
    n_paths: int
    seed: int
    mean_per_path_log_loss: float


# ---------------------------------------------------------------------------
# closed forms


def lvr_rate(w, m: MarketParams) -> float:
    """LVR rate (nats/day): half the gap between weighted and portfolio variance."""
    w = as_weights(w)
    if w.size != m.n:
        raise ValueError("weight dimension does not match the market")
    return float(0.5 * (w @ m.sigma**2 - w @ m.cov @ w))


def variance_drag(w, m: MarketParams) -> float:
    """Log-return drag (nats/day): half the weighted variance."""
    w = as_weights(w)
    if w.size != m.n:
        raise ValueError("weight dimension does not match the market")
    return float(0.5 * (w @ m.sigma**2))


def _lvr_profile(w_start, w_end, m: MarketParams, n_intervals: int) -> np.ndarray:
    s = np.arange(n_intervals + 1) / n_intervals
    pts = slerp_weights_at(w_start, w_end, s)
    sig2 = m.sigma**2
    cov = m.cov
    return 0.5 * (pts @ sig2 - np.einsum("si,ij,sj->s", pts, cov, pts))


def _simpson_mean(values: np.ndarray) -> float:
    n = values.size - 1
    if n % 2 != 0:
        raise ValueError("Simpson rule needs an even interval count")
    wts = np.ones(n + 1)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    return float(np.sum(wts * values) / (3.0 * n))


def mean_lvr_along_path(w_start, w_end, m: MarketParams, n_intervals: int = 256) -> float:
    """LVR rate averaged over the great-circle path between the endpoints.

    Fixed composite-Simpson quadrature on the continuous curve; the result
    depends only on the endpoints, not on any step count.
    """
    return _simpson_mean(_lvr_profile(w_start, w_end, m, n_intervals))


@dataclass(frozen=True)
class CostBreakdown:
    """Two-term analytic cost: decaying rebalancing part, growing LVR part."""

    total: float
    rebalance_term: float
    lvr_term: float


def analytic_cost(f: float, omega: float, mean_lvr: float, dt_block: float) -> CostBreakdown:
    """Expected cost 2 omega^2 / f + f dt mean_lvr of an f-step rebalance."""
    if f < 1:
        raise ValueError("step count f must be >= 1")
    rebal = 2.0 * omega * omega / f
    lvr = f * dt_block * mean_lvr
    return CostBreakdown(total=rebal + lvr, rebalance_term=rebal, lvr_term=lvr)


@dataclass(frozen=True)
class OptimalStep:
    """Cost-minimising step count (real; callers round) and its cost."""

    f_star: float
    cost: float


def optimal_step_count(omega: float, mean_lvr: float, dt_block: float) -> OptimalStep:
    """Step count balancing rebalancing cost against LVR exposure.

    At the optimum the two cost terms are equal. A non-positive average LVR
    means the cost only decreases with more steps (the constant-price
    regime), which is rejected here.
    """
    if mean_lvr <= 0.0:
        raise ValueError("mean LVR must be positive; with zero LVR, maximise f instead")
    f_star = omega * math.sqrt(2.0 / (dt_block * mean_lvr))
    cost = 2.0 * math.sqrt(2.0 * omega * omega * dt_block * mean_lvr)
    return OptimalStep(f_star=f_star, cost=cost)


def lambda_star(sigma_eff: float, mean_lvr: float) -> float:
    """Dimensionless LVR forcing strength 2 sigma^2 / mean_lvr at the optimum."""
    if mean_lvr <= 0.0:
        raise ValueError("mean LVR must be positive")
    return 2.0 * sigma_eff**2 / mean_lvr


# ---------------------------------------------------------------------------
# sampling


def _stream(seed: int, index: int) -> Generator:
    return Generator(Philox(key=[int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)]))


def _merton_diffusion_sigma(m: MarketParams) -> np.ndarray:
    model = m.price_model
    var = m.sigma**2 - np.where(m.sigma > 0.0, model.jump_variance_per_day, 0.0)
    return np.sqrt(np.maximum(var, 0.0))


def _draw_raw(gen: Generator, m: MarketParams, n_blocks: int) -> dict:
    draws = {"z": gen.standard_normal((n_blocks, m.n))}
    if isinstance(m.price_model, MertonJump):
        lam = m.price_model.jumps_per_day * m.dt_block
        draws["njump"] = gen.poisson(lam, size=(n_blocks, m.n))
        draws["zjump"] = gen.standard_normal((n_blocks, m.n))
    return draws


def _log_returns(m: MarketParams, draws: dict, sign: float) -> np.ndarray:
    """Per-block log returns (n_blocks, N) from one stream's draws.

    ``sign`` flips every normal draw, which is how antithetic pairs share a
    stream. Zero-volatility assets return exactly zero.
    """
    model = m.price_model
    dt = m.dt_block
    zc = (sign * draws["z"]) @ m._chol.T
    if isinstance(model, Gbm):
        sig = m.sigma
        return zc * (sig * math.sqrt(dt)) - 0.5 * sig**2 * dt
    if isinstance(model, MertonJump):
        sig_d = _merton_diffusion_sigma(m)
        out = zc * (sig_d * math.sqrt(dt)) - 0.5 * sig_d**2 * dt
        kbar = math.exp(model.jump_mean_log + 0.5 * model.jump_sigma**2) - 1.0
        active = m.sigma > 0.0
        nj = draws["njump"]
        jumps = nj * model.jump_mean_log + np.sqrt(nj) * model.jump_sigma * (sign * draws["zjump"])
        out += np.where(active, jumps - model.jumps_per_day * kbar * dt, 0.0)
        return out
    if isinstance(model, Garch11):
        out = np.zeros_like(zc)
        for i in range(m.n):
            if m.sigma[i] == 0.0:
                continue
            h_bar = m.sigma[i] ** 2 * dt
            omega = model.omega if model.omega is not None else h_bar * (1.0 - model.alpha - model.beta)
            out[:, i] = kernels.garch_log_returns(
                zc[:, i][None, :], h_bar, omega, model.alpha, model.beta
            )[0]
        return out
    raise TypeError(f"unknown price model {model!r}")


def sample_paths(m: MarketParams, n_blocks: int, n_paths: int, seed: int) -> np.ndarray:
    """Simulate price paths starting at 1; shape (n_paths, n_blocks+1, N).

    Path p consumes its own stream keyed by (seed, p), so any subset of
    paths is reproducible independently of the others.
    """
    if n_blocks < 1 or n_paths < 1:
        raise ValueError("need n_blocks >= 1 and n_paths >= 1")
    out = np.empty((n_paths, n_blocks + 1, m.n))
    out[:, 0, :] = 1.0
    for p in range(n_paths):
        lr = _log_returns(m, _draw_raw(_stream(seed, p), m, n_blocks), 1.0)
        out[p, 1:, :] = np.exp(np.cumsum(lr, axis=0))
    return out


# ---------------------------------------------------------------------------
# simulation of a rebalance along a price path


@dataclass(frozen=True)
class RebalanceOutcome:
    """Decomposition of the simulated log value change of one rebalance."""

    log_value_change: float
    rebalance_log: float
    price_log: float
    per_step_rebalance: np.ndarray
    per_step_price: np.ndarray


ORDERINGS = ("simultaneous", "price_then_weight")


def simulate_rebalance(trajectory: Trajectory, prices, ordering: str = "simultaneous") -> RebalanceOutcome:
    """Replay a weight trajectory against one price path.

    Step k contributes the (price-independent) retention log plus the log
    price return weighted by the step's new weights; ``price_then_weight``
    applies the old weights to the price move instead. ``prices`` must
    supply at least f+1 rows of N positive prices.
    """
    if ordering not in ORDERINGS:
        raise ValueError(f"unknown ordering {ordering!r}")
    prices = np.asarray(prices, dtype=np.float64)
    f, n = trajectory.f, trajectory.n
    if prices.ndim != 2 or prices.shape[1] != n:
        raise ValueError("prices must be a (blocks, N) array matching the trajectory")
    if prices.shape[0] < f + 1:
        raise ValueError(f"need at least {f + 1} price rows, got {prices.shape[0]}")
    if not np.all(np.isfinite(prices)) or np.any(prices <= 0.0):
        raise ValueError("prices must be finite and positive")
    per_step_rebalance = -kernels.step_losses(trajectory.points, kernel_code("exact_kl"))
    dlogp = np.diff(np.log(prices[: f + 1]), axis=0)
    wexp = trajectory.points[1:] if ordering == "simultaneous" else trajectory.points[:-1]
    per_step_price = np.sum(wexp * dlogp, axis=1)
    rebalance_log = float(np.sum(per_step_rebalance))
    price_log = float(np.sum(per_step_price))
    return RebalanceOutcome(
        log_value_change=rebalance_log + price_log,
        rebalance_log=rebalance_log,
        price_log=price_log,
        per_step_rebalance=per_step_rebalance,
        per_step_price=per_step_price,
    )


# ---------------------------------------------------------------------------
# Monte Carlo


def _mc_threads() -> int:
    try:
        return max(1, int(os.environ.get("REBAL_THREADS", "1")))
    except ValueError:
        return 1


def monte_carlo_cost(
    w_start,
    w_end,
    f: int,
    method: str,
    m: MarketParams,
    n_paths: int,
    seed: int,
    antithetic: bool = True,
    chunk: int = 256,
) -> SimResult:
    """Monte-Carlo estimate of the expected cost of an f-step rebalance.

    Simulates -log of the mean terminal value ratio over ``n_paths`` GBM (or
    jump/GARCH) paths. With ``antithetic=True`` (default) paths come in
    sign-flipped pairs sharing one stream keyed by (seed, pair); this cancels
    the first-order price noise, which is what makes the cost minimum in f
    resolvable at moderate path counts. With ``antithetic=False`` path p
    uses the same stream as ``sample_paths`` path p, so the estimate equals
    the plain composition with :func:`simulate_rebalance`.

    The reduction order is fixed by path index, so results do not depend on
    chunking or on the REBAL_THREADS worker count.
    """
    traj = make_path(method, w_start, w_end, f)
    if traj.n != m.n:
        raise ValueError("market dimension does not match the endpoints")
    rebalance_log = -float(np.sum(kernels.step_losses(traj.points, kernel_code("exact_kl"))))
    wexp = np.ascontiguousarray(traj.points[1:])

    if antithetic:
        if n_paths < 2 or n_paths % 2 != 0:
            raise ValueError("antithetic sampling needs a positive even n_paths")
        n_units = n_paths // 2
        signs: tuple[float, ...] = (1.0, -1.0)
    else:
        if n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        n_units = n_paths
        signs = (1.0,)

    unit_logv = np.empty((n_units, len(signs)))

    def run_chunk(lo: int, hi: int) -> None:
        for u in range(lo, hi):
            draws = _draw_raw(_stream(seed, u), m, f)
            for j, sign in enumerate(signs):
                lr = _log_returns(m, draws, sign)
                logp = np.concatenate([np.zeros((1, m.n)), np.cumsum(lr, axis=0)])
                total = kernels.weighted_logret_totals(wexp, logp[None, :, :])[0]
                unit_logv[u, j] = rebalance_log + total

    n_threads = _mc_threads()
    bounds = [(lo, min(lo + chunk, n_units)) for lo in range(0, n_units, chunk)]
    if n_threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(lambda b: run_chunk(*b), bounds))
    else:
        for b in bounds:
            run_chunk(*b)

    # stable -log(mean exp(logv)) with per-unit (pair) averaging first
    shift = float(np.max(unit_logv))
    v_units = np.mean(np.exp(unit_logv - shift), axis=1)
    v_mean = float(np.mean(v_units))
    cost = -(shift + math.log(v_mean))
    if n_units > 1:
        se = float(np.std(v_units, ddof=1)) / math.sqrt(n_units)
        ci = 1.96 * se / v_mean
    else:
        ci = 0.0
    mean_per_path = -(float(np.mean(unit_logv)))
    return SimResult(
        mean_log_loss=cost,
        ci95_halfwidth=ci,
        n_paths=n_paths,
        seed=int(seed),
        mean_per_path_log_loss=mean_per_path,
    )


# ---------------------------------------------------------------------------
# price CSV replay

CSV_HEADER_FIRST = "block"


def write_price_csv(path, prices) -> None:
    """Write a (blocks, N) price array as block,asset_0,...,asset_{N-1} rows."""
    prices = np.asarray(prices, dtype=np.float64)
    if prices.ndim != 2:
        raise ValueError("prices must be a 2-d array")
    n = prices.shape[1]
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join([CSV_HEADER_FIRST] + [f"asset_{i}" for i in range(n)]) + "\n")
        for k, row in enumerate(prices):
            fh.write(",".join([str(k)] + [format(v, ".17g") for v in row]) + "\n")


def read_price_csv(path) -> np.ndarray:
    """Read a price CSV written in the block,asset_0,... format.

    Raises ValueError with the offending line number on malformed input,
    NaN prices or non-positive prices.
    """
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2 or header[0].strip() != CSV_HEADER_FIRST:
            raise ValueError("line 1: expected header 'block,asset_0,...'")
        n = len(header) - 1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n + 1:
                raise ValueError(f"line {lineno}: expected {n + 1} columns, got {len(row)}")
            try:
                vals = [float(v) for v in row[1:]]
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric price") from None
            if any(math.isnan(v) or math.isinf(v) for v in vals):
                raise ValueError(f"line {lineno}: price is not finite")
            if any(v <= 0.0 for v in vals):
                raise ValueError(f"line {lineno}: price must be positive")
            rows.append(vals)
    if not rows:
        raise ValueError("line 2: price CSV has no data rows")
    return np.asarray(rows, dtype=np.float64)


def replay_rebalance(trajectory: Trajectory, price_csv_path, ordering: str = "simultaneous") -> RebalanceOutcome:
    """Replay a trajectory against block prices stored in a CSV file."""
    prices = read_price_csv(price_csv_path)
    if prices.shape[0] < trajectory.f + 1:
        raise ValueError(
            f"price CSV has {prices.shape[0]} rows, trajectory needs {trajectory.f + 1}"
        )
    return simulate_rebalance(trajectory, prices, ordering=ordering)
