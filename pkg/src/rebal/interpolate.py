"""Weight-trajectory generators between two simplex points.

All generators return a :class:`Trajectory` of f+1 points whose first and
last rows equal the requested endpoints. SLERP is the constant-speed great
circle in Hellinger coordinates; the (AM+GM)/normalise path shares its
midpoint exactly, which is what makes the trig-free recursive bisection
construction land on the same geodesic at power-of-two step counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simplex import WeightVector, as_weights, geodesic_angle, lambert_w0

METHODS = ("linear", "geometric", "amgm", "slerp", "bisection", "lambertw_midpoint", "custom")

# Below this geodesic angle the sin(omega) division is ill-conditioned and
# affine interpolation of the sphere coordinates agrees to O(omega^2).
SMALL_ANGLE = 1e-7


@dataclass(frozen=True)
class Trajectory:
    """An ordered sequence of f+1 weight vectors, one per block step."""

    points: np.ndarray
    method: str = "custom"

    def __post_init__(self):
        # own the storage: freezing a caller's array would be a side effect
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] < 2:
            raise ValueError("a trajectory needs at least 2 points of dimension >= 2")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("trajectory points must be finite")
        if np.any(pts <= 0.0):
            raise ValueError("trajectory points must be strictly positive")
        if np.max(np.abs(pts.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("every trajectory point must lie on the simplex")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def f(self) -> int:
        """Number of steps (one fewer than the number of points)."""
        return self.points.shape[0] - 1

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


def _endpoints(w_start, w_end) -> tuple[np.ndarray, np.ndarray]:
    ws, we = as_weights(w_start), as_weights(w_end)
    if ws.size != we.size:
        raise ValueError(f"dimension mismatch: {ws.size} vs {we.size}")
    return ws, we


def _check_steps(f: int) -> int:
    f = int(f)
    if f < 1:
        raise ValueError("step count f must be >= 1")
    return f


def _with_exact_endpoints(pts, ws, we, method) -> Trajectory:
    pts[0], pts[-1] = ws, we
    return Trajectory(pts, method)


def linear_path(w_start, w_end, f: int) -> Trajectory:
    """Component-wise affine interpolation; sums to 1 by construction."""
    ws, we = _endpoints(w_start, w_end)
    f = _check_steps(f)
    t = (np.arange(f + 1) / f)[:, None]
    return _with_exact_endpoints((1.0 - t) * ws + t * we, ws, we, "linear")


def geometric_path(w_start, w_end, f: int) -> Trajectory:
    """Component-wise geometric interpolation, renormalised to the simplex."""
    ws, we = _endpoints(w_start, w_end)
    f = _check_steps(f)
    t = (np.arange(f + 1) / f)[:, None]
    pts = ws ** (1.0 - t) * we**t
    pts /= pts.sum(axis=1, keepdims=True)
    return _with_exact_endpoints(pts, ws, we, "geometric")


def amgm_path(w_start, w_end, f: int) -> Trajectory:
    """Average of the affine and geometric paths, renormalised."""
    ws, we = _endpoints(w_start, w_end)
    f = _check_steps(f)
    t = (np.arange(f + 1) / f)[:, None]
    pts = (1.0 - t) * ws + t * we + ws ** (1.0 - t) * we**t
    pts /= pts.sum(axis=1, keepdims=True)
    return _with_exact_endpoints(pts, ws, we, "amgm")


def slerp_weights_at(w_start, w_end, t) -> np.ndarray:
    """Weights on the great-circle path at parameter values t in [0, 1].

    The path is the one traced by :func:`slerp_path`; ``t`` may be a scalar
    or an array, and the result has one row per parameter value.
    """
    ws, we = _endpoints(w_start, w_end)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))[:, None]
    es, ee = np.sqrt(ws), np.sqrt(we)
    omega = geodesic_angle(ws, we)
    if omega < SMALL_ANGLE:
        eta = (1.0 - t) * es + t * ee
        eta /= np.linalg.norm(eta, axis=1, keepdims=True)
    else:
        eta = (np.sin((1.0 - t) * omega) * es + np.sin(t * omega) * ee) / np.sin(omega)
    w = eta**2
    return w / w.sum(axis=1, keepdims=True)


def slerp_path(w_start, w_end, f: int) -> Trajectory:
    """Constant-speed geodesic in Hellinger coordinates (SLERP), squared back.

    Consecutive points subtend equal angles omega/f on the sphere. For
    nearly identical endpoints the formula degrades to affine interpolation
    of the sphere coordinates (see ``SMALL_ANGLE``).
    """
    ws, we = _endpoints(w_start, w_end)
    f = _check_steps(f)
    pts = slerp_weights_at(ws, we, np.arange(f + 1) / f)
    return _with_exact_endpoints(pts, ws, we, "slerp")


def two_token_theta_path(w_start: float, w_end: float, f: int) -> Trajectory:
    """Two-token SLERP as linear interpolation of theta = arcsin(sqrt(w)).

    ``w_start`` and ``w_end`` are the first token's weights, in (0, 1).
    """
    ws, we = float(w_start), float(w_end)
    for v in (ws, we):
        if not 0.0 < v < 1.0:
            raise ValueError("two-token weights must lie strictly inside (0, 1)")
    f = _check_steps(f)
    th0, th1 = np.arcsin(np.sqrt(ws)), np.arcsin(np.sqrt(we))
    theta = th0 + (np.arange(f + 1) / f) * (th1 - th0)
    w = np.sin(theta) ** 2
    pts = np.stack([w, 1.0 - w], axis=1)
    return _with_exact_endpoints(pts, np.array([ws, 1 - ws]), np.array([we, 1 - we]), "slerp")


def _unnormalized_lambertw_midpoint(w_start, w_end) -> np.ndarray:
    ws, we = _endpoints(w_start, w_end)
    return we / lambert_w0(np.e * we / ws)


def lambertw_midpoint(w_start, w_end) -> WeightVector:
    """Optimal single intermediate point of a two-step update, renormalised.

    Component-wise stationary point of the forward-plus-backward KL cost,
    w_end_i / W0(e w_end_i / w_start_i), renormalised onto the simplex.
    """
    m = _unnormalized_lambertw_midpoint(w_start, w_end)
    return WeightVector(m / m.sum())


def amgm_midpoint(a, b) -> np.ndarray:
    """Midpoint (a+b)/2 + sqrt(ab), normalised; equals the SLERP midpoint."""
    a, b = _endpoints(a, b)
    m = 0.5 * (a + b) + np.sqrt(a * b)
    return m / m.sum()


def bisection_path(w_start, w_end, depth: int) -> Trajectory:
    """SLERP at f = 2**depth steps using only +, *, sqrt and normalise.

    Recursively inserts the (AM+GM)/normalise midpoint between every
    adjacent pair; after ``depth`` levels the 2**depth + 1 points lie on the
    geodesic. Only dyadic step counts are reachable this way, so any other
    f must go through :func:`slerp_path`.
    """
    ws, we = _endpoints(w_start, w_end)
    depth = int(depth)
    if depth < 1:
        raise ValueError("bisection depth must be >= 1")
    pts = [ws, we]
    for _ in range(depth):
        nxt = []
        for a, b in zip(pts[:-1], pts[1:]):
            nxt.append(a)
            nxt.append(amgm_midpoint(a, b))
        nxt.append(pts[-1])
        pts = nxt
    return _with_exact_endpoints(np.asarray(pts), ws, we, "bisection")


_GENERATORS = {
    "linear": linear_path,
    "geometric": geometric_path,
    "amgm": amgm_path,
    "slerp": slerp_path,
}


def make_path(method: str, w_start, w_end, f: int) -> Trajectory:
    """Build a trajectory by method name ('bisection' takes f = 2**depth)."""
    if method == "bisection":
        depth = int(round(np.log2(f)))
        if 2**depth != f:
            raise ValueError("bisection requires a power-of-two step count")
        return bisection_path(w_start, w_end, depth)
    try:
        return _GENERATORS[method](w_start, w_end, f)
    except KeyError:
        raise ValueError(f"unknown trajectory method {method!r}") from None
