#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy reference backend.

Runs each kernel on realistic problem sizes (a 1000-step trajectory, a
Monte-Carlo block of paths at the worked-example step count) and prints the
per-call time for both backends plus the speedup. The compiled backend is
skipped if the extension is not built.
"""

from __future__ import annotations

import timeit

import numpy as np

from rebal._kernels import available_backends, numpy_backend
from rebal.interpolate import slerp_path


def time_call(fn, *args, repeat=5, number=20):
    best = min(timeit.repeat(lambda: fn(*args), repeat=repeat, number=number))
    return best / number


def main() -> int:
    backends = {"numpy": numpy_backend}
    if "cython" in available_backends():
        from rebal._kernels import _core

        backends["cython"] = _core
    else:
        print("compiled backend not built; benchmarking numpy only")

    rng = np.random.default_rng(7)
    traj = np.ascontiguousarray(slerp_path([0.05, 0.55, 0.40], [0.40, 0.50, 0.10], 1000).points)
    wexp = np.ascontiguousarray(traj[1:])
    logp = np.ascontiguousarray(
        np.concatenate(
            [np.zeros((64, 1, 3)), rng.normal(scale=3e-4, size=(64, 1000, 3)).cumsum(axis=1)],
            axis=1,
        )
    )
    z = rng.standard_normal((64, 2744))

    cases = [
        ("step_losses exact (f=1000, N=3)", "step_losses", (traj, 0)),
        ("step_losses pade (f=1000, N=3)", "step_losses", (traj, 2)),
        ("kl_total_and_interior_grad (f=1000)", "kl_total_and_interior_grad", (traj,)),
        ("weighted_logret_totals (64 paths, f=1000)", "weighted_logret_totals", (wexp, logp)),
        ("garch_log_returns (64 paths, 2744 blocks)", "garch_log_returns", (z, 1e-7, 4e-9, 0.06, 0.90)),
    ]

    width = max(len(name) for name, _, _ in cases)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>12}" for b in backends) + "     speedup"
    print(header)
    print("-" * len(header))
    for name, attr, args in cases:
        times = {b: time_call(getattr(mod, attr), *args) for b, mod in backends.items()}
        row = f"{name:<{width}}  " + "".join(f"{times[b] * 1e6:>10.1f}us" for b in backends)
        if len(times) == 2:
            row += f"  {times['numpy'] / times['cython']:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
