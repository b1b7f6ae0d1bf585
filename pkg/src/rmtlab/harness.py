"""Monte Carlo experiment harness: replicas, statistics, theory comparison.

Replica work always runs through a cached spawn-based process pool, even
with one worker, so results never depend on whether parallelism happens to
be enabled.  Reductions walk replicas in index order, BLAS threading inside
workers is pinned to one thread, and every replica draws its own generator
from ``derive_seed(base_seed, index)``; repeated runs are therefore
bit-identical for a fixed base seed regardless of worker count.

The statistics layer reports jackknife standard errors for every estimate
it exposes, so theory comparisons can be phrased uniformly as z-scores.
"""

from __future__ import annotations

import csv
import datetime
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np
from scipy import stats as _scipy_stats

from . import __version__ as _pkg_version
from ._kernels import BACKEND
from .clt_theory import covariance_functional, expectation_correction
from .dyson import solve_m
from .ensembles import EntryDistribution, distribution_from_config, ginibre, sample_matrix
from .errors import InvalidParameterError, ReplicaFailureError
from .seeding import derive_seed
from .spectral import hermitized_spectrum, nonhermitian_eigenvalues, overlap_matrix
from .testfunctions import from_config

__all__ = [
    "ExperimentConfig",
    "SummaryStats",
    "ExperimentResult",
    "LocalLawResult",
    "RunManifest",
    "run_clt_experiment",
    "summarize_replicas",
    "compare_to_theory",
    "local_law_scan",
    "overlap_scan",
    "write_outputs",
    "theory_prediction_for",
]

_ANNULUS = (1.05, 1.15)
_FAILURE_FRACTION = 0.01

# ---------------------------------------------------------------------------
# Configuration


@dataclass
class ExperimentConfig:
    """Declarative description of a Monte Carlo experiment.

    ``distribution`` and ``functions`` may be given as config dicts (the
    JSON form) or as already-built objects; they are normalised lazily so
    the config itself stays picklable and serialisable.  Keys outside the
    core schema land in ``extras`` (used by the scan-type experiments).
    """

    experiment: str = "clt-run"
    n: int = 64
    distribution: object = None
    functions: list = field(default_factory=list)
    replicas: int = 100
    base_seed: int = 0
    output: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    _CORE = ("experiment", "n", "distribution", "functions", "replicas",
             "base_seed", "output")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        core = {k: data[k] for k in cls._CORE if k in data}
        extras = {k: v for k, v in data.items() if k not in cls._CORE}
        return cls(**core, extras=extras)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def apply_override(self, dotted_key: str, raw_value: str) -> None:
        """Set ``a.b.c=value`` style overrides; values parse as JSON first."""
        try:
            value = json.loads(raw_value)
        except (json.JSONDecodeError, ValueError):
            value = raw_value
        parts = dotted_key.split(".")
        head = parts[0]
        if head not in self._CORE and head != "extras":
            target = self.extras
            parts = [head] + parts[1:]
        elif head == "extras":
            target = self.extras
            parts = parts[1:]
            if not parts:
                raise InvalidParameterError("override key 'extras' needs a subkey")
        else:
            if len(parts) == 1:
                setattr(self, head, value)
                return
            target = getattr(self, head)
            parts = parts[1:]
            if not isinstance(target, dict):
                raise InvalidParameterError(
                    f"cannot descend into non-dict config field {head!r}"
                )
        for p in parts[:-1]:
            target = target.setdefault(p, {})
        target[parts[-1]] = value

    def resolved_distribution(self) -> EntryDistribution:
        if self.distribution is None:
            return ginibre()
        if isinstance(self.distribution, EntryDistribution):
            return self.distribution
        return distribution_from_config(self.distribution)

    def function_configs(self) -> list:
        out = []
        for f in self.functions:
            if isinstance(f, (str, dict)):
                out.append(f)
            else:
                out.append(f.config)
        return out


# ---------------------------------------------------------------------------
# Process pool plumbing

_POOLS: dict = {}
_BLAS_VARS = ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS",
              "NUMEXPR_NUM_THREADS", "VECLIB_MAXIMUM_THREADS")


def _worker_count() -> int:
    raw = os.environ.get("RMTLAB_THREADS", "").strip()
    if raw:
        try:
            k = int(raw)
        except ValueError as exc:
            raise InvalidParameterError(f"RMTLAB_THREADS={raw!r} is not an integer") from exc
        if k < 1:
            raise InvalidParameterError(f"RMTLAB_THREADS must be >= 1, got {k}")
        return k
    return os.cpu_count() or 1


def _get_pool() -> ProcessPoolExecutor:
    workers = _worker_count()
    pool = _POOLS.get(workers)
    if pool is None:
        # Pin BLAS threading before the children are spawned; they inherit
        # the environment at spawn, while the parent's already-initialized
        # BLAS is unaffected.
        for var in _BLAS_VARS:
            os.environ[var] = "1"
        pool = ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn"))
        _POOLS[workers] = pool
    return pool


def _chunk_indices(total: int, workers: int) -> list:
    chunk = max(1, -(-total // (workers * 8)))
    return [list(range(s, min(s + chunk, total))) for s in range(0, total, chunk)]


_FN_CACHE: dict = {}


def _functions_for(func_cfgs: tuple):
    key = repr(func_cfgs)
    funcs = _FN_CACHE.get(key)
    if funcs is None:
        funcs = [from_config(c) for c in func_cfgs]
        _FN_CACHE[key] = funcs
    return funcs


def _clt_worker(task):
    base_seed, indices, n, dist, func_cfgs = task
    funcs = _functions_for(tuple(func_cfgs))
    out = []
    for idx in indices:
        try:
            X = sample_matrix(dist, n, derive_seed(base_seed, idx))
            sig = nonhermitian_eigenvalues(X).sigmas
            mods = np.abs(sig)
            flag = bool(np.any((mods > _ANNULUS[0]) & (mods < _ANNULUS[1])))
            sums = [complex(np.sum(f.value(sig))) for f in funcs]
            out.append((idx, sums, flag, None))
        except Exception as exc:  # noqa: BLE001 - reported, counted, re-raised in bulk
            out.append((idx, None, False, f"{type(exc).__name__}: {exc}"))
    return out


def _locallaw_worker(task):
    base_seed, indices, n, dist, z, etas, m_theory = task
    etas = np.asarray(etas, dtype=float)
    m_theory = np.asarray(m_theory, dtype=complex)
    out = []
    for idx in indices:
        try:
            X = sample_matrix(dist, n, derive_seed(base_seed, idx))
            lam = hermitized_spectrum(X, z).lambdas
            lam2 = lam * lam
            emp = 1j * np.sum(etas[:, None] / (lam2[None, :] + etas[:, None] ** 2), axis=1) / n
            out.append((idx, np.abs(emp - m_theory), None))
        except Exception as exc:  # noqa: BLE001
            out.append((idx, None, f"{type(exc).__name__}: {exc}"))
    return out


def _overlap_worker(task):
    base_seed, indices, n, dist, z1, z2, k = task
    out = []
    for idx in indices:
        try:
            X = sample_matrix(dist, n, derive_seed(base_seed, idx))
            s1 = hermitized_spectrum(X, z1, with_vectors=True)
            s2 = hermitized_spectrum(X, z2, with_vectors=True)
            out.append((idx, overlap_matrix(s1, s2, k), None))
        except Exception as exc:  # noqa: BLE001
            out.append((idx, None, f"{type(exc).__name__}: {exc}"))
    return out


def _run_chunked(worker, tasks):
    pool = _get_pool()
    results = []
    for chunk_result in pool.map(worker, tasks):
        results.extend(chunk_result)
    results.sort(key=lambda item: item[0])
    return results


# ---------------------------------------------------------------------------
# Statistics


@dataclass(frozen=True, eq=False)
class SummaryStats:
    """Replica statistics of one linear statistic, with jackknife errors.

    ``variance`` is E|L - mean|^2 and ``second_moment`` is E(L - mean)^2,
    both with the unbiased 1/(R-1) normalisation; ``third_cumulant_*`` are
    the third central moments and ``kurtosis_*`` the excess kurtoses of the
    real and imaginary parts.  With fewer than three replicas the point
    estimates stay finite but the affected standard errors are NaN, which
    is the "unreliable" flag.
    """

    label: str
    replicas: int
    failed: int
    annulus_count: int
    mean: complex
    se_mean_re: float
    se_mean_im: float
    variance: float
    se_variance: float
    second_moment: complex
    se_second_re: float
    se_second_im: float
    third_cumulant_re: float
    third_cumulant_im: float
    kurtosis_re: float
    kurtosis_im: float
    se_kurtosis_re: float
    se_kurtosis_im: float


def _jackknife_se(loo: np.ndarray) -> float:
    loo = np.asarray(loo, dtype=float)
    R = loo.size
    center = loo.mean()
    return float(np.sqrt((R - 1) / R * np.sum((loo - center) ** 2)))


def _kurtosis_and_se(x: np.ndarray):
    R = x.size
    mu = x.mean()
    c = x - mu
    m2 = np.mean(c * c)
    m4 = np.mean(c ** 4)
    kurt = float(m4 / m2 ** 2 - 3.0) if m2 > 0 else 0.0
    if R < 5 or m2 == 0:
        return kurt, float("nan")
    powers = [np.sum(x ** k) for k in range(1, 5)]
    r1 = (powers[0] - x) / (R - 1)
    r2 = (powers[1] - x ** 2) / (R - 1)
    r3 = (powers[2] - x ** 3) / (R - 1)
    r4 = (powers[3] - x ** 4) / (R - 1)
    m2l = r2 - r1 ** 2
    m4l = r4 - 4.0 * r1 * r3 + 6.0 * r1 ** 2 * r2 - 3.0 * r1 ** 4
    loo = m4l / m2l ** 2 - 3.0
    return kurt, _jackknife_se(loo)


def summarize_replicas(values, label: str = "", failed: int = 0,
                       annulus_count: int = 0) -> SummaryStats:
    """Compress one replica vector into a :class:`SummaryStats`.

    All leave-one-out statistics are evaluated vectorially from power sums,
    so the cost is linear in the number of replicas.
    """
    v = np.asarray(values, dtype=complex)
    R = v.size
    if R < 2:
        raise InvalidParameterError(f"need at least 2 replicas, got {R}")
    x = v.real
    y = v.imag

    mean = complex(v.mean())
    se_mean_re = float(np.std(x, ddof=1) / np.sqrt(R))
    se_mean_im = float(np.std(y, ddof=1) / np.sqrt(R))

    S1 = v.sum()
    S2 = float(np.sum(np.abs(v) ** 2))
    T2 = complex(np.sum(v * v))
    variance = float((S2 - R * abs(mean) ** 2) / (R - 1))
    second = complex((T2 - R * mean ** 2) / (R - 1))
    third_re = float(np.mean((x - x.mean()) ** 3))
    third_im = float(np.mean((y - y.mean()) ** 3))

    if R >= 3:
        mu_loo = (S1 - v) / (R - 1)
        var_loo = ((S2 - np.abs(v) ** 2) - (R - 1) * np.abs(mu_loo) ** 2) / (R - 2)
        sec_loo = ((T2 - v * v) - (R - 1) * mu_loo ** 2) / (R - 2)
        se_variance = _jackknife_se(var_loo)
        se_second_re = _jackknife_se(sec_loo.real)
        se_second_im = _jackknife_se(sec_loo.imag)
    else:
        se_variance = se_second_re = se_second_im = float("nan")

    kurt_re, se_kurt_re = _kurtosis_and_se(x)
    kurt_im, se_kurt_im = _kurtosis_and_se(y)

    return SummaryStats(
        label=label, replicas=R, failed=failed, annulus_count=annulus_count,
        mean=mean, se_mean_re=se_mean_re, se_mean_im=se_mean_im,
        variance=variance, se_variance=se_variance,
        second_moment=second, se_second_re=se_second_re, se_second_im=se_second_im,
        third_cumulant_re=third_re, third_cumulant_im=third_im,
        kurtosis_re=kurt_re, kurtosis_im=kurt_im,
        se_kurtosis_re=se_kurt_re, se_kurtosis_im=se_kurt_im,
    )


# ---------------------------------------------------------------------------
# Experiments


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """Raw per-replica sums plus their summaries, one entry per function.

    ``cross_covariance[i, j]`` estimates E L(f_i) conj(L(f_j)) with
    empirical centring, in the order of ``labels``.
    """

    config: ExperimentConfig
    labels: list
    values: dict
    annulus_flags: np.ndarray
    failures: list
    stats: list
    cross_covariance: np.ndarray


def run_clt_experiment(config) -> ExperimentResult:
    """Sample replicas of the linear statistics described by ``config``.

    Records, per function, the plain eigenvalue sum of each replica (no
    centring; the summaries centre empirically).  Replicas whose
    eigenvalues enter the cutoff transition annulus are flagged, never
    dropped.  A failure rate above 1 percent aborts the run.
    """
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    if config.replicas < 2:
        raise InvalidParameterError("need at least 2 replicas")
    if not config.functions:
        raise InvalidParameterError("config lists no test functions")
    dist = config.resolved_distribution()
    func_cfgs = config.function_configs()
    funcs = [from_config(c) for c in func_cfgs]
    labels = [f.label for f in funcs]

    tasks = [(config.base_seed, idx, config.n, dist, func_cfgs)
             for idx in _chunk_indices(config.replicas, _worker_count())]
    rows = _run_chunked(_clt_worker, tasks)

    failures = [(idx, err) for idx, _, _, err in rows if err is not None]
    if len(failures) > _FAILURE_FRACTION * config.replicas:
        raise ReplicaFailureError(
            f"{len(failures)} of {config.replicas} replicas failed; first: "
            f"{failures[0][1]}", failed=len(failures), total=config.replicas,
        )
    good = [(idx, sums, flag) for idx, sums, flag, err in rows if err is None]
    flags = np.array([flag for _, _, flag in good], dtype=bool)
    data = np.array([sums for _, sums, _ in good], dtype=complex)

    values = {}
    stats = []
    for j, label in enumerate(labels):
        values[label] = data[:, j].copy()
        stats.append(summarize_replicas(
            data[:, j], label=label, failed=len(failures),
            annulus_count=int(flags.sum()),
        ))
    centred = data - data.mean(axis=0, keepdims=True)
    R = data.shape[0]
    cross = (centred.T @ centred.conj()) / max(R - 1, 1)
    return ExperimentResult(config=config, labels=labels, values=values,
                            annulus_flags=flags, failures=failures, stats=stats,
                            cross_covariance=cross)


def theory_prediction_for(f, kappa4: float, n: int, **quad_kwargs) -> dict:
    """Limit-theory targets for one test function: variance, second moment, mean.

    Keys: ``variance`` (E|L|^2 prediction), ``second_moment`` (E L^2
    prediction, from the covariance against the conjugate function),
    ``leading`` and ``correction`` (expectation).
    """
    from .testfunctions import conjugate

    cov = covariance_functional(f, f, kappa4, **quad_kwargs)
    sec = covariance_functional(conjugate(f), f, kappa4, **quad_kwargs)
    leading, correction = expectation_correction(f, kappa4, n, **{
        k: v for k, v in quad_kwargs.items() if k != "fourier_cutoff"})
    return {
        "variance": cov.total,
        "variance_breakdown": cov,
        "second_moment": sec.total,
        "leading": leading,
        "correction": correction,
    }


def _safe_z(measured: float, predicted: float, se: float) -> float:
    dev = measured - predicted
    if se == 0.0 or not np.isfinite(se):
        return 0.0 if dev == 0.0 else float("inf")
    return float(dev / se)


def compare_to_theory(stats: SummaryStats, prediction, expectation) -> dict:
    """z-scores of the measured statistics against their theory targets.

    ``prediction`` carries the fluctuation targets (a dict from
    :func:`theory_prediction_for`, or a breakdown/scalar for the variance
    alone); ``expectation`` is ``(leading, correction)`` or their sum.
    Kurtosis targets are identically zero (Gaussian limit).
    """
    if hasattr(prediction, "total"):
        prediction = {"variance": prediction.total}
    elif isinstance(prediction, (int, float, complex)):
        prediction = {"variance": prediction}
    if isinstance(expectation, (tuple, list)):
        mean_target = complex(expectation[0]) + complex(expectation[1])
    else:
        mean_target = complex(expectation)

    out = {
        "mean_re": _safe_z(stats.mean.real, mean_target.real, stats.se_mean_re),
        "mean_im": _safe_z(stats.mean.imag, mean_target.imag, stats.se_mean_im),
        "variance": _safe_z(stats.variance, complex(prediction["variance"]).real,
                            stats.se_variance),
        "kurtosis_re": _safe_z(stats.kurtosis_re, 0.0, stats.se_kurtosis_re),
        "kurtosis_im": _safe_z(stats.kurtosis_im, 0.0, stats.se_kurtosis_im),
    }
    if "second_moment" in prediction:
        target = complex(prediction["second_moment"])
        out["second_moment_re"] = _safe_z(stats.second_moment.real, target.real,
                                          stats.se_second_re)
        out["second_moment_im"] = _safe_z(stats.second_moment.imag, target.imag,
                                          stats.se_second_im)
    return out


def overlap_scan(n: int, z1: complex, z2: complex, k: int, replicas: int,
                 base_seed: int = 0,
                 distribution: EntryDistribution | None = None) -> np.ndarray:
    """Seed-averaged singular-vector overlap kernel for the leading k indices.

    Returns the k x k matrix of the overlap kernel between the
    decompositions of ``X - z1`` and ``X - z2``, averaged over replicas.
    """
    dist = distribution if distribution is not None else ginibre()
    if replicas < 1:
        raise InvalidParameterError("need at least 1 replica")
    tasks = [(base_seed, idx, n, dist, complex(z1), complex(z2), int(k))
             for idx in _chunk_indices(replicas, _worker_count())]
    rows = _run_chunked(_overlap_worker, tasks)
    failures = [(i, e) for i, _, e in rows if e is not None]
    if len(failures) > _FAILURE_FRACTION * replicas:
        raise ReplicaFailureError(
            f"{len(failures)} of {replicas} overlap replicas failed; first: "
            f"{failures[0][1]}", failed=len(failures), total=replicas,
        )
    stack = np.array([m for _, m, e in rows if e is None])
    return stack.mean(axis=0)


@dataclass(frozen=True, eq=False)
class LocalLawResult:
    """Error table of the resolvent against its deterministic limit."""

    rows: list
    slope: float
    intercept: float
    slope_stderr: float


def local_law_scan(ns, etas, z: complex, replicas: int, base_seed: int = 0,
                   distribution: EntryDistribution | None = None) -> LocalLawResult:
    """Mean resolvent error over a (n, eta) grid and its decay exponent.

    ``etas`` is either a sequence shared by all n or a callable n -> grid.
    The fitted slope is of log(mean error) against log(n * eta); the error
    should shrink like 1/(n eta) inside the spectral window.
    """
    dist = distribution if distribution is not None else ginibre()
    ns = [int(n) for n in ns]
    if replicas < 2:
        raise InvalidParameterError("need at least 2 replicas")
    eta_floor = 1.0 / max(ns)
    rows = []
    log_ne = []
    log_err = []
    for n in ns:
        grid = np.asarray(etas(n) if callable(etas) else etas, dtype=float)
        if np.any(grid <= 0):
            raise InvalidParameterError("eta grid must be positive")
        if np.any(grid < eta_floor):
            raise InvalidParameterError(
                f"eta grid goes below 1/max(ns) = {eta_floor:.3e}"
            )
        m_th = [complex(solve_m(z, 1j * eta).m) for eta in grid]
        tasks = [(derive_seed(base_seed, n), idx, n, dist, complex(z), grid.tolist(), m_th)
                 for idx in _chunk_indices(replicas, _worker_count())]
        results = _run_chunked(_locallaw_worker, tasks)
        failures = [(i, e) for i, _, e in results if e is not None]
        if len(failures) > _FAILURE_FRACTION * replicas:
            raise ReplicaFailureError(
                f"{len(failures)} of {replicas} replicas failed at n={n}; "
                f"first: {failures[0][1]}", failed=len(failures), total=replicas,
            )
        errs = np.array([vec for _, vec, e in results if e is None])
        mean_err = errs.mean(axis=0)
        se_err = errs.std(axis=0, ddof=1) / np.sqrt(errs.shape[0])
        for eta, me, se in zip(grid, mean_err, se_err):
            rows.append({"n": n, "eta": float(eta), "error": float(me),
                         "se": float(se)})
            log_ne.append(np.log(n * eta))
            log_err.append(np.log(me))
    fit = _scipy_stats.linregress(log_ne, log_err)
    return LocalLawResult(rows=rows, slope=float(fit.slope),
                          intercept=float(fit.intercept),
                          slope_stderr=float(fit.stderr))


# ---------------------------------------------------------------------------
# Output


@dataclass(frozen=True, eq=False)
class RunManifest:
    """Provenance sidecar for an output file pair.

    Carries the config hash, seed, code version, and per-replica flags
    needed to reproduce the run bit-exactly.  The manifest may include
    wall-clock information; the data files themselves never do, so
    repeated runs stay bit-identical.
    """

    created: str
    package_version: str
    backend: str
    workers: int
    experiment: str
    n: int
    distribution: str
    replicas: int
    base_seed: int
    seed_scheme: str
    config_hash: str
    failed: int
    annulus_flags: list

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _config_hash(cfg: ExperimentConfig) -> str:
    import hashlib

    payload = {
        "experiment": cfg.experiment,
        "n": cfg.n,
        "distribution": cfg.resolved_distribution().label(),
        "functions": cfg.function_configs(),
        "replicas": cfg.replicas,
        "base_seed": cfg.base_seed,
        "extras": cfg.extras,
    }
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


_CSV_COLUMNS = [
    "label", "replicas", "failed", "annulus_count",
    "mean_re", "mean_im", "se_mean_re", "se_mean_im",
    "variance", "se_variance",
    "second_moment_re", "second_moment_im", "se_second_re", "se_second_im",
    "third_cumulant_re", "third_cumulant_im",
    "kurtosis_re", "kurtosis_im", "se_kurtosis_re", "se_kurtosis_im",
]


def _stats_row(s: SummaryStats) -> dict:
    return {
        "label": s.label, "replicas": s.replicas, "failed": s.failed,
        "annulus_count": s.annulus_count,
        "mean_re": repr(s.mean.real), "mean_im": repr(s.mean.imag),
        "se_mean_re": repr(s.se_mean_re), "se_mean_im": repr(s.se_mean_im),
        "variance": repr(s.variance), "se_variance": repr(s.se_variance),
        "second_moment_re": repr(s.second_moment.real),
        "second_moment_im": repr(s.second_moment.imag),
        "se_second_re": repr(s.se_second_re), "se_second_im": repr(s.se_second_im),
        "third_cumulant_re": repr(s.third_cumulant_re),
        "third_cumulant_im": repr(s.third_cumulant_im),
        "kurtosis_re": repr(s.kurtosis_re), "kurtosis_im": repr(s.kurtosis_im),
        "se_kurtosis_re": repr(s.se_kurtosis_re),
        "se_kurtosis_im": repr(s.se_kurtosis_im),
    }


def write_outputs(result: ExperimentResult, csv_path=None, json_path=None,
                  comparisons=None) -> dict:
    """Write the summary CSV, the JSON mirror, and the manifest sidecar.

    Paths default to the config's ``output`` mapping.  ``comparisons`` (a
    JSON-serialisable mapping, typically label -> z-score dict) is embedded
    in the JSON report when given.  Returns the mapping of artifact names
    to paths actually written.
    """
    cfg = result.config
    csv_path = csv_path or cfg.output.get("csv")
    json_path = json_path or cfg.output.get("json")
    written = {}
    rows = [_stats_row(s) for s in result.stats]

    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=_CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        written["csv"] = str(csv_path)
    if json_path:
        payload = {
            "experiment": cfg.experiment,
            "n": cfg.n,
            "replicas": cfg.replicas,
            "base_seed": cfg.base_seed,
            "distribution": cfg.resolved_distribution().label(),
            "stats": rows,
        }
        if comparisons is not None:
            payload["comparisons"] = comparisons
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written["json"] = str(json_path)

    anchor = csv_path or json_path
    if anchor:
        manifest = RunManifest(
            created=datetime.datetime.now(datetime.timezone.utc).isoformat(),
            package_version=_pkg_version,
            backend=BACKEND,
            workers=_worker_count(),
            experiment=cfg.experiment,
            n=cfg.n,
            distribution=cfg.resolved_distribution().label(),
            replicas=cfg.replicas,
            base_seed=cfg.base_seed,
            seed_scheme="replica seed = splitmix64 finalizer of "
                        "base_seed + (index+1) * golden-gamma",
            config_hash=_config_hash(cfg),
            failed=len(result.failures),
            annulus_flags=[bool(b) for b in result.annulus_flags],
        )
        mpath = str(anchor) + ".manifest.json"
        with open(mpath, "w", encoding="utf-8") as fh:
            json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written["manifest"] = mpath
    return written
