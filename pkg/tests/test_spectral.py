"""Finite-n spectral routines against dense block-matrix oracles."""

import numpy as np
import pytest
from scipy.integrate import quad

from rmtlab.ensembles import ginibre, sample_matrix
from rmtlab.errors import InvalidParameterError, PreconditionError
from rmtlab.spectral import (HermitizedSpectrum, eigenvector_overlap,
                             eta_integral_closed_form, hermitized_spectrum,
                             log_abs_det_regularized, nonhermitian_eigenvalues,
                             overlap_matrix, resolvent_trace,
                             trace_im_product, two_resolvent_trace)


def _dense_h(X, z):
    n = X.shape[0]
    A = X - z * np.eye(n)
    return np.block([[np.zeros((n, n)), A], [A.conj().T, np.zeros((n, n))]])


def _spec_from_values(z, lambdas):
    lam = np.asarray(lambdas, dtype=float)
    return HermitizedSpectrum(z=complex(z), n=lam.size, lambdas=lam)


def test_spectrum_matches_dense_hermitisation():
    X = sample_matrix(ginibre(), 12, 4).entries
    z = 0.3 - 0.2j
    spec = hermitized_spectrum(X, z)
    assert np.all(np.diff(spec.lambdas) >= 0)
    dense = np.linalg.eigvalsh(_dense_h(X, z))
    np.testing.assert_allclose(
        np.sort(np.abs(dense)), np.sort(np.repeat(spec.lambdas, 2)),
        rtol=1e-10, atol=1e-12,
    )


def test_vectors_satisfy_shifted_action():
    X = sample_matrix(ginibre(), 10, 8).entries
    z = 0.5 + 0.1j
    spec = hermitized_spectrum(X, z, with_vectors=True)
    assert spec.has_vectors
    A = X - z * np.eye(10)
    for i in range(10):
        u = spec.left_vectors[:, i]
        v = spec.right_vectors[:, i]
        np.testing.assert_allclose(A @ v, spec.lambdas[i] * u, atol=1e-10)
        np.testing.assert_allclose(A.conj().T @ u, spec.lambdas[i] * v, atol=1e-10)


def test_plain_array_and_sample_agree():
    X = sample_matrix(ginibre(), 8, 1)
    a = hermitized_spectrum(X, 0.1).lambdas
    b = hermitized_spectrum(X.entries, 0.1).lambdas
    np.testing.assert_array_equal(a, b)
    with pytest.raises(InvalidParameterError):
        hermitized_spectrum(np.zeros((2, 3)), 0.0)


def test_nonhermitian_eigenvalues_trace():
    X = sample_matrix(ginibre(), 20, 2)
    spec = nonhermitian_eigenvalues(X)
    assert spec.n == 20
    np.testing.assert_allclose(np.sum(spec.sigmas), np.trace(X.entries),
                               rtol=0, atol=1e-10)


def test_resolvent_trace_pinned():
    # lambdas (1, 3), eta = 2: (i/2) * (2/5 + 2/13) = i 18/65.
    spec = _spec_from_values(0.0, [1.0, 3.0])
    val = resolvent_trace(spec, 2.0)
    np.testing.assert_allclose(val, 1j * 18.0 / 65.0, rtol=1e-14)
    with pytest.raises(InvalidParameterError):
        resolvent_trace(spec, 0.0)


def test_resolvent_trace_dense():
    X = sample_matrix(ginibre(), 9, 5).entries
    z = 0.2 + 0.4j
    eta = 0.37
    spec = hermitized_spectrum(X, z)
    dense = np.trace(np.linalg.inv(_dense_h(X, z) - 1j * eta * np.eye(18))) / 18.0
    np.testing.assert_allclose(resolvent_trace(spec, eta), dense, rtol=1e-11)


def test_eta_integral_closed_form():
    spec = _spec_from_values(0.0, [0.5, 1.5, 2.5])
    a, b = 0.1, 3.0
    closed = eta_integral_closed_form(spec, a, b)

    def im_trace(eta):
        return float(np.sum(2.0 * eta / (spec.lambdas**2 + eta**2)))

    numeric, _ = quad(im_trace, a, b, epsabs=1e-12, epsrel=1e-12)
    np.testing.assert_allclose(closed, numeric, rtol=1e-10)
    with pytest.raises(InvalidParameterError):
        eta_integral_closed_form(spec, 1.0, 0.5)
    with pytest.raises(InvalidParameterError):
        eta_integral_closed_form(spec, -0.1, 1.0)


def test_log_abs_det_regularized():
    X = sample_matrix(ginibre(), 7, 9).entries
    z = 0.1
    T = 50.0
    spec = hermitized_spectrum(X, z)
    dense = _dense_h(X, z) - 1j * T * np.eye(14)
    target = np.sum(np.log(np.abs(np.linalg.eigvals(dense))))
    np.testing.assert_allclose(log_abs_det_regularized(spec, T), target, rtol=1e-10)
    with pytest.raises(InvalidParameterError):
        log_abs_det_regularized(spec, 0.0)


def test_trace_im_product_dense():
    X = sample_matrix(ginibre(), 8, 12).entries
    z1, z2 = 0.3, -0.2 + 0.1j
    eta1, eta2 = 0.21, 0.43
    s1 = hermitized_spectrum(X, z1, with_vectors=True)
    s2 = hermitized_spectrum(X, z2, with_vectors=True)
    H1 = _dense_h(X, z1)
    H2 = _dense_h(X, z2)
    eye = np.eye(16)
    im1 = eta1 * np.linalg.inv(H1 @ H1 + eta1**2 * eye)
    im2 = eta2 * np.linalg.inv(H2 @ H2 + eta2**2 * eye)
    np.testing.assert_allclose(trace_im_product(s1, s2, eta1, eta2),
                               np.trace(im1 @ im2).real, rtol=1e-10)


def test_trace_im_product_needs_vectors():
    spec = _spec_from_values(0.0, [1.0, 2.0])
    with pytest.raises(PreconditionError):
        trace_im_product(spec, spec, 0.1, 0.1)


def test_two_resolvent_trace_dense():
    X = sample_matrix(ginibre(), 8, 3).entries
    z1, z2 = 0.25, 0.6 - 0.3j
    eta1, eta2 = 0.31, 0.17
    B = np.array([[1.0, 0.5 - 0.25j], [0.1j, -0.7]])
    s1 = hermitized_spectrum(X, z1, with_vectors=True)
    s2 = hermitized_spectrum(X, z2, with_vectors=True)
    eye = np.eye(16)
    G1 = np.linalg.inv(_dense_h(X, z1) - 1j * eta1 * eye)
    G2 = np.linalg.inv(_dense_h(X, z2) - 1j * eta2 * eye)
    B_full = np.kron(B, np.eye(8))
    dense = np.trace(G1 @ B_full @ G2) / 16.0
    np.testing.assert_allclose(two_resolvent_trace(s1, s2, eta1, eta2, B),
                               dense, rtol=1e-10)


def test_two_resolvent_trace_validation():
    X = sample_matrix(ginibre(), 6, 3).entries
    s = hermitized_spectrum(X, 0.0, with_vectors=True)
    with pytest.raises(InvalidParameterError):
        two_resolvent_trace(s, s, 0.1, 0.1, np.eye(3))
    with pytest.raises(InvalidParameterError):
        two_resolvent_trace(s, s, -0.1, 0.1, np.eye(2))


def test_overlap_same_spectrum_identity():
    X = sample_matrix(ginibre(), 10, 6).entries
    s = hermitized_spectrum(X, 0.4, with_vectors=True)
    for i in (1, 3, 10):
        np.testing.assert_allclose(eigenvector_overlap(s, s, i, i), 1.0, rtol=1e-12)
    np.testing.assert_allclose(overlap_matrix(s, s, 10), np.eye(10), atol=1e-10)


def test_overlap_matrix_matches_entries_and_transpose():
    X = sample_matrix(ginibre(), 9, 7).entries
    s1 = hermitized_spectrum(X, 0.0, with_vectors=True)
    s2 = hermitized_spectrum(X, 0.5, with_vectors=True)
    M = overlap_matrix(s1, s2, 4)
    for i in range(1, 5):
        for j in range(1, 5):
            np.testing.assert_allclose(M[i - 1, j - 1],
                                       eigenvector_overlap(s1, s2, i, j),
                                       rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(M, overlap_matrix(s2, s1, 4).T, rtol=1e-11,
                               atol=1e-13)


def test_overlap_index_validation():
    X = sample_matrix(ginibre(), 5, 7).entries
    s = hermitized_spectrum(X, 0.0, with_vectors=True)
    with pytest.raises(InvalidParameterError):
        eigenvector_overlap(s, s, 0, 1)
    with pytest.raises(InvalidParameterError):
        eigenvector_overlap(s, s, 1, 6)
    with pytest.raises(InvalidParameterError):
        overlap_matrix(s, s, 6)
