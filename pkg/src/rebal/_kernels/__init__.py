"""Numerical hot-loop kernels with an optional compiled fast path.

The Cython extension ``rebal._kernels._core`` and the pure-numpy module
``rebal._kernels.numpy_backend`` implement the same four functions. The
compiled backend is selected at import time when available; set
``REBAL_KERNELS=python`` (or ``numpy``) to force the fallback. The test
suite cross-checks both backends, and ``benchmarks/bench_kernels.py``
compares their throughput.
"""

from __future__ import annotations

import os

from . import numpy_backend

KIND_EXACT = numpy_backend.KIND_EXACT
KIND_QUADRATIC = numpy_backend.KIND_QUADRATIC
KIND_PADE = numpy_backend.KIND_PADE

_impl = numpy_backend
BACKEND = "numpy"

if os.environ.get("REBAL_KERNELS", "").lower() not in ("python", "numpy"):
    try:
        from . import _core as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

step_losses = _impl.step_losses
kl_total_and_interior_grad = _impl.kl_total_and_interior_grad
weighted_logret_totals = _impl.weighted_logret_totals
garch_log_returns = _impl.garch_log_returns


def available_backends():
    """Names of the importable backends ('numpy' always, 'cython' if built)."""
    names = ["numpy"]
    try:
        from . import _core  # noqa: F401
    except ImportError:
        pass
    else:
        names.append("cython")
    return names
