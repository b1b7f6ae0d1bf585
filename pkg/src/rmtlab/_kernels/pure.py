"""Pure-numpy implementations of the particle-system hot kernels.

These are the fallback twins of the compiled routines in ``_core``; both
backends implement the same contracts and agree to ~1e-12 relative (the
summation orders differ, so bit-identity across backends is not promised).
"""

from __future__ import annotations

import numpy as np

__all__ = ["dbm_drift_kernel", "attempt_step_kernel", "pairwise_sum"]


def dbm_drift_kernel(points: np.ndarray) -> np.ndarray:
    """Drift of the symmetric singular-value particle system.

    For the positive half ``l_1 < ... < l_n`` of a sign-symmetric particle
    configuration, the drift on particle i is

        (1/2n) * [ sum_{j != i} ( 1/(l_i - l_j) + 1/(l_i + l_j) ) + 1/(2 l_i) ]

    which is computed here as the repulsion sum over ``j != i`` plus the
    attraction sum over all ``j`` (its ``j == i`` term is the ``1/(2 l_i)``
    reflection term).
    """
    lam = np.asarray(points, dtype=np.float64)
    n = lam.size
    diff = lam[:, None] - lam[None, :]
    np.fill_diagonal(diff, np.inf)
    repulsion = np.sum(1.0 / diff, axis=1)
    attraction = np.sum(1.0 / (lam[:, None] + lam[None, :]), axis=1)
    return (repulsion + attraction) / (2.0 * n)


def attempt_step_kernel(points: np.ndarray, increments: np.ndarray, dt: float):
    """Propose one Euler-Maruyama step; report whether ordering survived.

    Returns ``(ok, proposal)`` where ``proposal = points + increments/sqrt(2n)
    + drift*dt`` and ``ok`` is True iff the proposal is strictly positive and
    strictly increasing. No state is mutated; the caller decides whether to
    accept or to sub-step.
    """
    lam = np.asarray(points, dtype=np.float64)
    n = lam.size
    drift = dbm_drift_kernel(lam)
    proposal = lam + np.asarray(increments, dtype=np.float64) / np.sqrt(2.0 * n) + drift * dt
    ok = bool(proposal[0] > 0.0 and np.all(np.diff(proposal) > 0.0))
    return ok, proposal


def pairwise_sum(values: np.ndarray) -> float:
    """Deterministic pairwise reduction (numpy's own blocked pairwise sum)."""
    return float(np.sum(np.asarray(values, dtype=np.float64)))
