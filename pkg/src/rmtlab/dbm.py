"""Coupled dynamics of singular-value particle systems.

The positive singular values of a matrix undergoing additive Brownian
motion evolve, to leading order, as an interacting particle system: each
particle feels the usual pairwise repulsion plus a reflection term from the
mirrored negative particles.  This module integrates that system with an
adaptive Brownian-bridge substepper, evolves the underlying matrix flow for
ground truth, and generates driver noise in four coupling modes so that
trajectories at different shift points z can share, correlate, or decouple
their low-lying noise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._kernels import attempt_step_kernel, dbm_drift_kernel
from .dyson import density_at
from .errors import InvalidParameterError, StepFailureError
from .seeding import derive_seed, generator_for
from .spectral import hermitized_spectrum

__all__ = [
    "DbmConfig",
    "DbmState",
    "DriverSpec",
    "DbmRunResult",
    "dbm_drift",
    "dbm_step",
    "matrix_flow_step",
    "extract_driver_increments",
    "run_coupled",
    "independence_statistic",
    "scaled_positions",
]

_MODES = ("independent", "coupled_below_K", "overlap_correlated", "matrix_flow")
_MAX_BRIDGE_DEPTH = 24


@dataclass(frozen=True)
class DbmConfig:
    """Integration parameters for a coupled run."""

    n: int
    dt: float
    t_final: float
    substep_cap: int = 64
    record_every: int = 0


@dataclass(frozen=True)
class DbmState:
    """One particle configuration: strictly increasing positive points."""

    time: float
    points: np.ndarray
    n: int


@dataclass(frozen=True)
class DriverSpec:
    """Noise source description for :func:`run_coupled`.

    ``mode`` is one of ``independent``, ``coupled_below_K`` (the lowest K
    particles of every system share one noise stream), ``overlap_correlated``
    (two systems, jointly Gaussian drivers with the given cross-correlation
    matrix), or ``matrix_flow`` (drivers extracted from an explicit matrix
    Brownian motion; requires ``zs`` and ``initial_matrix``).
    """

    mode: str
    seed: int
    K: int | None = None
    overlap: np.ndarray | None = None
    zs: tuple = ()
    initial_matrix: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class DbmRunResult:
    """Recorded trajectories of a coupled run.

    ``points[s][r]`` is the particle vector of system ``s`` at record row
    ``r``; ``true_points`` carries the singular values of the evolving
    matrix at the same times (matrix_flow mode only, else None).
    """

    times: np.ndarray
    points: list
    true_points: list | None
    final_states: list
    mode: str


def _validate_points(points) -> np.ndarray:
    lam = np.asarray(points, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0:
        raise InvalidParameterError("points must be a nonempty 1-d array")
    if not (lam[0] > 0.0 and np.all(np.diff(lam) > 0.0)):
        raise InvalidParameterError("points must be strictly positive and increasing")
    return lam


def dbm_drift(points: np.ndarray, n: int) -> np.ndarray:
    """Drift field of the reflected particle system.

    ``(1/2n) [ sum_{j != i} 1/(l_i - l_j) + sum_j 1/(l_i + l_j) ]``; the
    ``j == i`` term of the second sum is the reflection force ``1/(2 l_i)``.
    """
    lam = _validate_points(points)
    if n != lam.size:
        raise InvalidParameterError(
            f"dimension n={n} must match the particle count {lam.size}"
        )
    return dbm_drift_kernel(lam)


def dbm_step(state: DbmState, increments: np.ndarray, dt: float,
             rng: np.random.Generator | None = None,
             substep_cap: int = 64) -> DbmState:
    """Advance one macro step of size ``dt`` under given Brownian increments.

    The Euler proposal is accepted when it keeps the particles positive and
    ordered; otherwise the Brownian increment is split at its midpoint by a
    bridge draw and the two halves are integrated recursively.  With
    ``rng=None`` the bridge midpoint is the conditional mean (no fresh
    randomness), which keeps the integrator deterministic for replay.

    Raises
    ------
    StepFailureError
        If more than ``substep_cap`` accepted sub-steps would be needed, or
        the bridge recursion exceeds a fixed depth. Carries the offending
        gap and particle index.
    """
    if dt <= 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    if substep_cap < 1:
        raise InvalidParameterError(f"substep_cap must be >= 1, got {substep_cap}")
    lam = _validate_points(state.points)
    dw = np.asarray(increments, dtype=np.float64)
    if dw.shape != lam.shape:
        raise InvalidParameterError(
            f"increments shape {dw.shape} does not match points shape {lam.shape}"
        )

    leaves = 0

    def _fail(cfg):
        gaps = np.empty(cfg.size)
        gaps[0] = cfg[0]
        gaps[1:] = np.diff(cfg)
        k = int(np.argmin(gaps))
        raise StepFailureError(
            f"sub-step budget ({substep_cap}) exhausted; tightest gap "
            f"{gaps[k]:.3e} at particle {k}",
            gap=float(gaps[k]), index=k,
        )

    def advance(cfg, inc, h, depth):
        nonlocal leaves
        ok, proposal = attempt_step_kernel(cfg, inc, h)
        if ok:
            leaves += 1
            if leaves > substep_cap:
                _fail(cfg)
            return proposal
        if depth >= _MAX_BRIDGE_DEPTH or leaves + 2 > substep_cap:
            _fail(cfg)
        if rng is None:
            mid = 0.5 * inc
        else:
            mid = 0.5 * inc + 0.5 * np.sqrt(h) * rng.standard_normal(cfg.size)
        cfg = advance(cfg, mid, 0.5 * h, depth + 1)
        return advance(cfg, inc - mid, 0.5 * h, depth + 1)

    out = advance(lam, dw, float(dt), 0)
    return DbmState(time=state.time + float(dt), points=out, n=state.n)


def matrix_flow_step(X: np.ndarray, dt: float, rng: np.random.Generator):
    """One additive Brownian increment of the matrix flow.

    Returns ``(X_next, dB)`` with ``X_next = X + dB / sqrt(n)`` and i.i.d.
    complex Gaussian ``dB`` entries of variance ``dt`` (real and imaginary
    parts each ``dt/2``).
    """
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise InvalidParameterError(f"matrix must be square, got shape {X.shape}")
    if dt <= 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    n = X.shape[0]
    re = rng.standard_normal((n, n))
    im = rng.standard_normal((n, n))
    dB = (re + 1j * im) * np.sqrt(dt / 2.0)
    return X + dB / np.sqrt(n), dB


def extract_driver_increments(X: np.ndarray, dB: np.ndarray, specs):
    """Effective scalar Brownian increments felt by each singular value.

    First-order perturbation of ``s_i(X - z)`` under ``X -> X + dB/sqrt(n)``
    gives ``ds_i = Re(u_i^* dB v_i)/sqrt(n)``; matching the particle
    normalisation ``d l_i = db_i / sqrt(2n)`` yields

        b_i = sqrt(2) Re( u_i^* dB v_i ),

    which has variance ``dt`` when ``E|dB_jk|^2 = dt``.  ``specs`` is one
    decomposition with frames or a sequence of them (one per shift point);
    the return matches (one array, or a list of arrays).
    """
    single = not isinstance(specs, (list, tuple))
    spec_list = [specs] if single else list(specs)
    dB = np.asarray(dB)
    out = []
    for spec in spec_list:
        if not spec.has_vectors:
            raise InvalidParameterError(
                "driver extraction needs singular-vector frames; "
                "recompute the decomposition with vectors"
            )
        if dB.shape != (spec.n, spec.n):
            raise InvalidParameterError(
                f"increment shape {dB.shape} does not match spectrum dimension {spec.n}"
            )
        U = spec.left_vectors
        V = spec.right_vectors
        b = np.sqrt(2.0) * np.real(
            np.einsum("ai,ab,bi->i", U.conj(), dB, V, optimize=True)
        )
        out.append(np.ascontiguousarray(b))
    return out[0] if single else out


def _record_rows(n_steps: int, record_every: int):
    if record_every <= 0:
        return {0, n_steps}
    rows = set(range(0, n_steps + 1, record_every))
    rows.add(n_steps)
    rows.add(0)
    return rows


def run_coupled(config: DbmConfig, initial_states, driver: DriverSpec) -> DbmRunResult:
    """Integrate several particle systems under a shared noise description.

    Every system takes the same macro time steps; the driver spec decides
    how their Brownian increments relate.  Sub-stepping draws come from
    per-system side streams so the macro increments are identical across
    modes that share them.
    """
    if driver.mode not in _MODES:
        raise InvalidParameterError(
            f"unknown driver mode {driver.mode!r}; expected one of {_MODES}"
        )
    if config.dt <= 0 or config.t_final <= 0:
        raise InvalidParameterError("dt and t_final must be positive")
    n_steps = int(round(config.t_final / config.dt))
    if n_steps < 1:
        raise InvalidParameterError("t_final must cover at least one step")
    states = list(initial_states)
    if not states:
        raise InvalidParameterError("need at least one initial state")
    n_sys = len(states)
    sizes = [len(s.points) for s in states]

    bridge_rngs = [generator_for(derive_seed(derive_seed(driver.seed, i), 1))
                   for i in range(n_sys)]
    sqrt_dt = np.sqrt(config.dt)

    draw = None
    matrix = None
    zs = ()
    if driver.mode == "independent":
        streams = [generator_for(derive_seed(driver.seed, i)) for i in range(n_sys)]

        def draw(step):
            return [streams[i].standard_normal(sizes[i]) * sqrt_dt for i in range(n_sys)]

    elif driver.mode == "coupled_below_K":
        if driver.K is None or driver.K < 1:
            raise InvalidParameterError("coupled_below_K needs a positive K")
        K = int(driver.K)
        if any(K > m for m in sizes):
            raise InvalidParameterError(f"K={K} exceeds a system size in {sizes}")
        shared = generator_for(derive_seed(driver.seed, n_sys))
        streams = [generator_for(derive_seed(driver.seed, i)) for i in range(n_sys)]

        def draw(step):
            low = shared.standard_normal(K) * sqrt_dt
            out = []
            for i in range(n_sys):
                rest = streams[i].standard_normal(sizes[i] - K) * sqrt_dt
                out.append(np.concatenate([low, rest]))
            return out

    elif driver.mode == "overlap_correlated":
        if n_sys != 2:
            raise InvalidParameterError(
                "overlap_correlated drives exactly two systems"
            )
        theta = np.asarray(driver.overlap, dtype=np.float64) if driver.overlap is not None else None
        if theta is None or theta.shape != (sizes[0], sizes[1]):
            raise InvalidParameterError(
                f"overlap matrix of shape {(sizes[0], sizes[1])} required"
            )
        m0, m1 = sizes
        C = np.eye(m0 + m1)
        C[:m0, m0:] = theta
        C[m0:, :m0] = theta.T
        evals, Q = np.linalg.eigh(C)
        # correlation targets outside the PSD cone are projected onto it
        root = (Q * np.sqrt(np.clip(evals, 0.0, None))) @ Q.T
        stream = generator_for(derive_seed(driver.seed, 0))

        def draw(step):
            b = root @ stream.standard_normal(m0 + m1) * sqrt_dt
            return [b[:m0], b[m0:]]

    else:  # matrix_flow
        if driver.initial_matrix is None:
            raise InvalidParameterError("matrix_flow needs initial_matrix")
        if len(driver.zs) != n_sys:
            raise InvalidParameterError(
                f"matrix_flow needs one z per system, got {len(driver.zs)} for {n_sys}"
            )
        matrix = np.asarray(driver.initial_matrix).astype(complex)
        if matrix.shape != (config.n, config.n):
            raise InvalidParameterError(
                f"initial matrix shape {matrix.shape} does not match n={config.n}"
            )
        zs = tuple(complex(z) for z in driver.zs)
        flow_rng = generator_for(derive_seed(driver.seed, 0))

    rows = _record_rows(n_steps, config.record_every)
    times = []
    recorded = [[] for _ in range(n_sys)]
    recorded_true = [[] for _ in range(n_sys)] if driver.mode == "matrix_flow" else None

    def record(step):
        times.append(step * config.dt)
        for i in range(n_sys):
            recorded[i].append(states[i].points.copy())
        if recorded_true is not None:
            for i in range(n_sys):
                s = hermitized_spectrum(matrix, zs[i])
                recorded_true[i].append(s.lambdas.copy())

    record(0)
    for step in range(1, n_steps + 1):
        if driver.mode == "matrix_flow":
            specs = [hermitized_spectrum(matrix, z, with_vectors=True) for z in zs]
            stepped, dB = matrix_flow_step(matrix, config.dt, flow_rng)
            incs = extract_driver_increments(matrix, dB, specs)
            matrix = stepped
        else:
            incs = draw(step)
        for i in range(n_sys):
            states[i] = dbm_step(states[i], incs[i], config.dt,
                                 rng=bridge_rngs[i], substep_cap=config.substep_cap)
        if step in rows:
            record(step)

    return DbmRunResult(
        times=np.asarray(times),
        points=[np.asarray(r) for r in recorded],
        true_points=None if recorded_true is None else [np.asarray(r) for r in recorded_true],
        final_states=list(states),
        mode=driver.mode,
    )


def independence_statistic(points, n: int, eta: float, omega_hat: float,
                           delta0: float = 0.1, delta1: float = 0.1) -> float:
    """Low-lying spectral mass probe ``(1/n) sum_{i <= K} 2 eta/(l_i^2 + eta^2)``.

    ``K = floor(n**omega_hat)``; with ``omega_hat = 1`` this equals the full
    imaginary resolvent trace at ``i eta`` (times ``-2i``).  A warning is
    issued when ``eta`` leaves the window ``[n**-(1+delta0), n**(-1+delta1)]``
    where the probe is designed to operate.
    """
    lam = np.asarray(points.points if isinstance(points, DbmState) else points,
                     dtype=np.float64)
    if eta <= 0:
        raise InvalidParameterError(f"eta must be positive, got {eta}")
    if omega_hat < 0:
        raise InvalidParameterError(f"omega_hat must be >= 0, got {omega_hat}")
    K = int(np.floor(float(n) ** omega_hat))
    if K > lam.size:
        raise InvalidParameterError(
            f"cutoff K={K} exceeds the available particle count {lam.size}"
        )
    K = max(K, 1)
    lo = float(n) ** (-1.0 - delta0)
    hi = float(n) ** (-1.0 + delta1)
    if not (lo <= eta <= hi):
        warnings.warn(
            f"eta={eta:.3e} is outside the designed window [{lo:.3e}, {hi:.3e}]",
            stacklevel=2,
        )
    low = lam[:K]
    return float(np.sum(2.0 * eta / (low * low + eta * eta)) / n)


def scaled_positions(points, z: complex, n: int) -> np.ndarray:
    """Particle positions in local density units near the spectral origin.

    Multiplies by ``n`` times the symmetrized spectral density at zero, so
    unit spacing corresponds to one bulk level; a proxy that ignores the
    density's variation over the window it is applied to.
    """
    lam = np.asarray(points.points if isinstance(points, DbmState) else points,
                     dtype=np.float64)
    rho = density_at(z, 0.0)
    return lam * (n * rho)
