"""Entry distributions and matrix sampling.

Each supported entry law ``chi`` is normalized so that ``E chi = E chi^2 = 0``
and ``E |chi|^2 = 1`` exactly (by construction of the atoms or density), and
matrix entries are distributed as ``n**-0.5 * chi``. The tunable quantity is
the fourth cumulant ``kappa4 = E|chi|^4 - 2``, which ranges over ``[-1, 0]``
for mixtures, equals ``0`` for the Gaussian law, and is positive for the
sparse phase law.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidParameterError
from .seeding import generator_for

__all__ = [
    "EntryDistribution",
    "MatrixSample",
    "Moments",
    "ginibre",
    "four_phase",
    "sparse_phase",
    "mixture",
    "distribution_from_config",
    "moments_of",
    "sample_matrix",
]

_KINDS = ("ginibre", "four_phase", "sparse_phase", "mixture")

# The four phase atoms, exact in floating point.
_PHASES = np.array([1.0 + 0.0j, 0.0 + 1.0j, -1.0 + 0.0j, 0.0 - 1.0j])


class Moments(NamedTuple):
    mean: complex
    second: complex  # E chi^2
    abs2: float      # E |chi|^2
    abs4: float      # E |chi|^4
    kappa4: float


@dataclass(frozen=True)
class EntryDistribution:
    """A single-entry law with declared exact moments.

    Use the module-level constructors (:func:`ginibre`, :func:`four_phase`,
    :func:`sparse_phase`, :func:`mixture`) rather than instantiating
    directly; they validate parameters and fill in the moment table.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"unknown entry distribution kind {self.kind!r}")
        # Trigger parameter validation early.
        moments_of(self)

    @property
    def kappa4(self) -> float:
        return moments_of(self).kappa4

    @property
    def declared_moments(self) -> Moments:
        return moments_of(self)

    def label(self) -> str:
        if self.params:
            inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
            return f"{self.kind}({inner})"
        return self.kind


def ginibre() -> EntryDistribution:
    """Complex Gaussian entries: independent real/imaginary parts, variance 1/2 each."""
    return EntryDistribution("ginibre")


def four_phase() -> EntryDistribution:
    """``chi`` uniform on the four unit phases ``{1, i, -1, -i}``; ``kappa4 = -1``."""
    return EntryDistribution("four_phase")


def sparse_phase(p: float) -> EntryDistribution:
    """``chi = 0`` with probability ``1-p``, else radius ``p**-0.5`` uniform phase.

    ``kappa4 = 1/p - 2`` is positive for ``p < 1/2``.
    """
    return EntryDistribution("sparse_phase", {"p": float(p)})


def mixture(weight: float) -> EntryDistribution:
    """Draw from four_phase with probability ``weight``, else from ginibre.

    Interpolates the fourth cumulant: ``kappa4 = -weight``.
    """
    return EntryDistribution("mixture", {"weight": float(weight)})


def distribution_from_config(spec) -> EntryDistribution:
    """Build a distribution from ``{"kind": ..., "params": {...}}`` (or a bare name)."""
    if isinstance(spec, EntryDistribution):
        return spec
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    params = spec.get("params", {}) or {}
    if kind == "ginibre":
        return ginibre()
    if kind == "four_phase":
        return four_phase()
    if kind == "sparse_phase":
        if "p" not in params:
            raise InvalidParameterError("sparse_phase needs params.p")
        return sparse_phase(params["p"])
    if kind == "mixture":
        if "weight" not in params:
            raise InvalidParameterError("mixture needs params.weight")
        return mixture(params["weight"])
    raise InvalidParameterError(f"unknown entry distribution kind {kind!r}")


def moments_of(dist: EntryDistribution) -> Moments:
    """Exact analytic moments of the entry law (and ``kappa4 = E|chi|^4 - 2``)."""
    if dist.kind == "ginibre":
        return Moments(0j, 0j, 1.0, 2.0, 0.0)
    if dist.kind == "four_phase":
        # Four unit-modulus atoms: |chi|^4 = 1 surely.
        return Moments(0j, 0j, 1.0, 1.0, -1.0)
    if dist.kind == "sparse_phase":
        p = dist.params.get("p")
        if p is None or not (0.0 < p <= 1.0):
            raise InvalidParameterError(f"sparse_phase requires p in (0, 1], got {p}")
        # With probability p the modulus is p**-1/2: E|chi|^2 = 1, E|chi|^4 = 1/p.
        return Moments(0j, 0j, 1.0, 1.0 / p, 1.0 / p - 2.0)
    if dist.kind == "mixture":
        w = dist.params.get("weight")
        if w is None or not (0.0 <= w <= 1.0):
            raise InvalidParameterError(f"mixture requires weight in [0, 1], got {w}")
        return Moments(0j, 0j, 1.0, (1.0 - w) * 2.0 + w * 1.0, -w)
    raise InvalidParameterError(f"unknown entry distribution kind {dist.kind!r}")


@dataclass(eq=False)
class MatrixSample:
    """An n x n complex sample with its provenance.

    ``entries`` are scaled by ``n**-0.5`` already; ``seed`` and
    ``distribution_tag`` identify the generating stream so a sample can be
    reproduced bit-exactly.
    """

    n: int
    entries: np.ndarray
    seed: int
    distribution_tag: EntryDistribution


def sample_matrix(dist: EntryDistribution, n: int, seed: int) -> MatrixSample:
    """Sample an n x n matrix of i.i.d. ``n**-0.5 * chi`` entries.

    The draw order per kind is fixed (all sub-streams are drawn
    unconditionally), so the output is a pure function of
    ``(dist, n, seed)`` independent of any parallel traversal.
    """
    if n < 1:
        raise InvalidParameterError(f"matrix dimension must be >= 1, got {n}")
    rng = generator_for(seed)
    scale = 1.0 / np.sqrt(n)
    if dist.kind == "ginibre":
        re = rng.standard_normal((n, n))
        im = rng.standard_normal((n, n))
        entries = (re + 1j * im) * (scale / np.sqrt(2.0))
    elif dist.kind == "four_phase":
        k = rng.integers(0, 4, size=(n, n))
        entries = _PHASES[k] * scale
    elif dist.kind == "sparse_phase":
        p = dist.params["p"]
        hit = rng.random((n, n)) < p
        theta = rng.random((n, n)) * (2.0 * np.pi)
        entries = np.where(hit, np.exp(1j * theta) / np.sqrt(p), 0.0 + 0.0j) * scale
    elif dist.kind == "mixture":
        w = dist.params["weight"]
        pick_phase = rng.random((n, n)) < w
        re = rng.standard_normal((n, n))
        im = rng.standard_normal((n, n))
        k = rng.integers(0, 4, size=(n, n))
        gauss = (re + 1j * im) / np.sqrt(2.0)
        entries = np.where(pick_phase, _PHASES[k], gauss) * scale
    else:  # pragma: no cover - kinds validated at construction
        raise InvalidParameterError(f"unknown entry distribution kind {dist.kind!r}")
    return MatrixSample(n=n, entries=entries, seed=int(seed), distribution_tag=dist)
