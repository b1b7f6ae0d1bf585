"""Kernel backend selection.

The compiled extension ``rmtlab._kernels._core`` is preferred when it was
built; otherwise the pure-numpy fallback in ``pure`` is used. Setting the
environment variable ``RMTLAB_PURE_PYTHON=1`` forces the fallback (useful
for benchmarking and for debugging the compiled path).

Both backends satisfy the same contracts; run manifests record which one
was active because results are bit-reproducible per backend, not across
backends.
"""

import importlib
import logging
import os

from . import pure as _pure

__all__ = ["BACKEND", "dbm_drift_kernel", "attempt_step_kernel", "pairwise_sum"]

LOGGER = logging.getLogger(__name__)

_force_pure = os.environ.get("RMTLAB_PURE_PYTHON", "").strip() not in ("", "0")

_core = None
if not _force_pure:
    try:
        _core = importlib.import_module(__name__ + "._core")
    except ImportError:  # extension not built; fall back silently but log
        _core = None
        LOGGER.info("compiled kernels unavailable, using pure-numpy fallback")

if _core is not None:
    BACKEND = "compiled"
    dbm_drift_kernel = _core.dbm_drift_kernel
    attempt_step_kernel = _core.attempt_step_kernel
    pairwise_sum = _core.pairwise_sum
else:
    BACKEND = "pure"
    dbm_drift_kernel = _pure.dbm_drift_kernel
    attempt_step_kernel = _pure.attempt_step_kernel
    pairwise_sum = _pure.pairwise_sum
