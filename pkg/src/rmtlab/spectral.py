"""Finite-n spectral computations for the symmetrized shift structure.

For a square sample ``X`` and a complex shift ``z``, the block matrix

    H = [[0, X - z], [(X - z)*, 0]]

has spectrum ``{+s_i} U {-s_i}`` where ``s_i`` are the singular values of
``X - z``, with eigenvectors assembled from the left/right singular-vector
frames as ``w_{+-i} = (u_i, +-v_i)/sqrt(2)``. Everything in this module
works with the n x n frames directly; 2n-vectors are never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import MatrixSample
from .errors import InvalidParameterError, NumericalBackendError, PreconditionError

__all__ = [
    "HermitizedSpectrum",
    "NonHermitianSpectrum",
    "hermitized_spectrum",
    "nonhermitian_eigenvalues",
    "resolvent_trace",
    "eta_integral_closed_form",
    "log_abs_det_regularized",
    "trace_im_product",
    "two_resolvent_trace",
    "eigenvector_overlap",
    "overlap_matrix",
]


@dataclass(eq=False)
class HermitizedSpectrum:
    """Positive-half spectrum (and optional frames) of the symmetrized shift.

    Attributes
    ----------
    z : complex
    n : int
    lambdas : ndarray
        Ascending positive singular values ``s_1 <= ... <= s_n`` of ``X - z``.
    left_vectors, right_vectors : ndarray or None
        Unit-norm frames with ``(X - z) v_i = s_i u_i`` (columns), present
        iff the decomposition was requested with vectors.
    """

    z: complex
    n: int
    lambdas: np.ndarray
    left_vectors: np.ndarray | None = None
    right_vectors: np.ndarray | None = None

    @property
    def has_vectors(self) -> bool:
        return self.left_vectors is not None and self.right_vectors is not None


@dataclass(eq=False)
class NonHermitianSpectrum:
    """Full complex spectrum of a sample (unordered)."""

    sigmas: np.ndarray
    n: int


def _as_sample(X) -> MatrixSample:
    """Accept either a MatrixSample or a plain square array."""
    if isinstance(X, MatrixSample):
        return X
    A = np.asarray(X)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidParameterError(f"matrix must be square, got shape {A.shape}")
    return MatrixSample(n=A.shape[0], entries=A.astype(complex, copy=False),
                        seed=-1, distribution_tag=None)


def hermitized_spectrum(X, z: complex, with_vectors: bool = False) -> HermitizedSpectrum:
    """Singular-value decomposition of ``X - z`` in ascending order.

    Parameters
    ----------
    X : MatrixSample or ndarray
    z : complex
    with_vectors : bool
        Also return the left/right singular-vector frames.
    """
    X = _as_sample(X)
    A = X.entries - z * np.eye(X.n)
    try:
        if with_vectors:
            U, s, Vh = np.linalg.svd(A)
        else:
            s = np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalBackendError(
            f"SVD failed for shift z={z!r}, n={X.n}, seed={X.seed}: {exc}"
        ) from exc
    order = slice(None, None, -1)  # LAPACK returns descending
    if with_vectors:
        return HermitizedSpectrum(
            z=complex(z),
            n=X.n,
            lambdas=np.ascontiguousarray(s[order]),
            left_vectors=np.ascontiguousarray(U[:, order]),
            right_vectors=np.ascontiguousarray(Vh[order, :].conj().T),
        )
    return HermitizedSpectrum(z=complex(z), n=X.n, lambdas=np.ascontiguousarray(s[order]))


def nonhermitian_eigenvalues(X) -> NonHermitianSpectrum:
    """Complex eigenvalues of the sample, with a trace sanity gate."""
    X = _as_sample(X)
    try:
        sig = np.linalg.eigvals(X.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalBackendError(
            f"eigenvalue solver failed for n={X.n}, seed={X.seed}: {exc}"
        ) from exc
    scale = X.n * max(np.linalg.norm(X.entries), 1e-300)
    defect = abs(np.sum(sig) - np.trace(X.entries))
    if defect > 1e-8 * scale:
        raise NumericalBackendError(
            f"eigenvalue sum deviates from trace by {defect:.3e} (> 1e-8 * n * ||X||)"
        )
    return NonHermitianSpectrum(sigmas=sig, n=X.n)


def resolvent_trace(spec: HermitizedSpectrum, eta: float) -> complex:
    """Normalized resolvent trace on the imaginary axis.

    Returns ``(i / 2n) * sum_{signed i} eta / (lambda_i^2 + eta^2)``, which
    is purely imaginary with positive imaginary part.
    """
    if eta <= 0:
        raise InvalidParameterError(f"eta must be positive, got {eta}")
    lam = spec.lambdas
    return 1j * float(np.sum(eta / (lam * lam + eta * eta))) / spec.n


def eta_integral_closed_form(spec: HermitizedSpectrum, a: float, b: float) -> float:
    """Closed form of the spectral-parameter integral of ``Im Tr G(i eta)``.

    Returns ``sum_{signed i} (1/2) log((lambda_i^2 + b^2) / (lambda_i^2 + a^2))``,
    the exact value of ``int_a^b Im Tr G(i eta) d eta``.
    """
    if a < 0 or b <= a:
        raise InvalidParameterError(f"need 0 <= a < b, got a={a}, b={b}")
    lam2 = spec.lambdas * spec.lambdas
    return float(np.sum(np.log((lam2 + b * b) / (lam2 + a * a))))


def log_abs_det_regularized(spec: HermitizedSpectrum, T: float) -> float:
    """``log |det(H - iT)| = sum_{i>0} log(lambda_i^2 + T^2)`` from the stored spectrum."""
    if T <= 0:
        raise InvalidParameterError(f"regularization T must be positive, got {T}")
    lam2 = spec.lambdas * spec.lambdas
    return float(np.sum(np.log(lam2 + T * T)))


def _require_vectors(*specs: HermitizedSpectrum):
    for s in specs:
        if not s.has_vectors:
            raise PreconditionError("this operation needs frames; recompute with with_vectors=True")
    n = specs[0].n
    if any(s.n != n for s in specs):
        raise PreconditionError("spectra must share the same dimension")


def trace_im_product(spec1: HermitizedSpectrum, spec2: HermitizedSpectrum,
                     eta1: float, eta2: float) -> float:
    """Trace of the product of the two imaginary resolvent parts.

    Computes ``sum_{i,j signed} a_i b_j |<w_i, w_j>|^2`` with
    ``a_i = eta1/(lambda_i^2 + eta1^2)`` and ``b_j`` alike; the signed double
    sum collapses to n x n frame Grammians:

        sum over the four sign blocks of |(U +- V)/2|^2  =  |U|^2 + |V|^2

    per positive-index pair, with ``U = u1* u2`` and ``V = v1* v2``.
    """
    if eta1 <= 0 or eta2 <= 0:
        raise InvalidParameterError("eta values must be positive")
    _require_vectors(spec1, spec2)
    U = spec1.left_vectors.conj().T @ spec2.left_vectors
    V = spec1.right_vectors.conj().T @ spec2.right_vectors
    a = eta1 / (spec1.lambdas ** 2 + eta1 ** 2)
    b = eta2 / (spec2.lambdas ** 2 + eta2 ** 2)
    M = np.abs(U) ** 2 + np.abs(V) ** 2
    return float(a @ M @ b)


def two_resolvent_trace(spec1: HermitizedSpectrum, spec2: HermitizedSpectrum,
                        eta1: float, eta2: float, B: np.ndarray) -> complex:
    """Normalized trace ``<G1 B G2>`` for a block-constant middle factor.

    ``B`` is a 2x2 complex descriptor: the actual operator has blocks
    ``B[k, l] * Id``. The trace is assembled from the four sign blocks of the
    spectral decompositions using only n x n Grammians.
    """
    if eta1 <= 0 or eta2 <= 0:
        raise InvalidParameterError("eta values must be positive")
    _require_vectors(spec1, spec2)
    B = np.asarray(B, dtype=complex)
    if B.shape != (2, 2):
        raise InvalidParameterError("B descriptor must be 2x2")
    U = spec1.left_vectors.conj().T @ spec2.left_vectors
    V = spec1.right_vectors.conj().T @ spec2.right_vectors
    C = spec1.left_vectors.conj().T @ spec2.right_vectors
    D = spec1.right_vectors.conj().T @ spec2.left_vectors
    total = 0.0 + 0.0j
    for s in (1.0, -1.0):
        d1 = 1.0 / (s * spec1.lambdas - 1j * eta1)
        for t in (1.0, -1.0):
            d2 = 1.0 / (t * spec2.lambdas - 1j * eta2)
            K = 0.5 * (B[0, 0] * U + t * B[0, 1] * C + s * B[1, 0] * D + s * t * B[1, 1] * V)
            L = 0.5 * (U + s * t * V)
            total += np.einsum("i,ij,ij,j->", d1, K, L.conj(), d2)
    return complex(total) / (2.0 * spec1.n)


def eigenvector_overlap(spec_l: HermitizedSpectrum, spec_m: HermitizedSpectrum,
                        i: int, j: int) -> float:
    """Overlap kernel entry for one pair of positive indices (1-based).

    With half-normalized vectors ``u = u_hat/sqrt(2)``, ``v = v_hat/sqrt(2)``:

        4 Re[ <u_i^(l), u_j^(m)> <v_j^(m), v_i^(l)> ]
        = Re[ <u_hat_i^(l), u_hat_j^(m)> <v_hat_j^(m), v_hat_i^(l)> ]

    Both factors pair index i of spectrum l with index j of spectrum m, so
    the entry is invariant under the per-pair phase freedom ``(u_k, v_k) ->
    (e^{i t} u_k, e^{i t} v_k)`` of the singular frames; any other index
    pairing would depend on the solver's arbitrary phase choices.  At
    ``spec_l == spec_m`` the kernel is the identity, and the entry equals
    the stationary covariance rate of the driver increments extracted at
    the two shifts.
    """
    _require_vectors(spec_l, spec_m)
    n = spec_l.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise InvalidParameterError(f"indices must lie in [1, {n}], got i={i}, j={j}")
    a = np.vdot(spec_l.left_vectors[:, i - 1], spec_m.left_vectors[:, j - 1])
    b = np.vdot(spec_m.right_vectors[:, j - 1], spec_l.right_vectors[:, i - 1])
    return float(np.real(a * b))


def overlap_matrix(spec_l: HermitizedSpectrum, spec_m: HermitizedSpectrum,
                   k: int | None = None) -> np.ndarray:
    """Vectorized overlap kernel for the leading ``k`` positive indices.

    ``result[i-1, j-1] == eigenvector_overlap(spec_l, spec_m, i, j)``.
    The matrix is symmetric under the simultaneous swap of indices and
    spectra, which for fixed ordering here means ``overlap_matrix(l, m) ==
    overlap_matrix(m, l).T``.
    """
    _require_vectors(spec_l, spec_m)
    if k is None:
        k = spec_l.n
    if not (1 <= k <= spec_l.n):
        raise InvalidParameterError(f"leading block size must lie in [1, {spec_l.n}]")
    A = spec_l.left_vectors[:, :k].conj().T @ spec_m.left_vectors[:, :k]
    B = spec_l.right_vectors[:, :k].conj().T @ spec_m.right_vectors[:, :k]
    return np.real(A * B.conj())
