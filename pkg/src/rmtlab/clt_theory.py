"""Closed-form limit predictions for linear eigenvalue statistics.

Contents

* pair kernels ``v_kernel`` (explicit rational form, equal to the mixed
  eta-derivative of a log expression) and ``u_kernel``;
* their eta-integrals, with the closed three-case formula ``theta_closed``;
* boundary Fourier analysis on the unit circle and the homogeneous H^{1/2}
  semi-inner product;
* the covariance functional C(g,f) with its three-term breakdown and the
  fourth-cumulant expectation correction.

Conventions: C(g,f) predicts E L(f) conj(L(g)) for centred linear
statistics L; all disk integrals are over the open unit disk regardless of
how far the test functions' supports extend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyson import solve_m
from .errors import InvalidParameterError, SingularityError
from .quadrature import converge_disk_integrals, log_eta_grid
from .testfunctions import TestFunction

__all__ = [
    "BoundarySpectrum",
    "CovarianceBreakdown",
    "v_kernel",
    "stability_log_argument",
    "u_kernel",
    "theta_closed",
    "theta_quadrature",
    "u_integral",
    "u_integral_closed",
    "boundary_fourier",
    "h_half_inner",
    "covariance_functional",
    "expectation_correction",
]

_A_GUARD = 1e-12


def _axis_point_arrays(z, etas):
    """m and u of the imaginary-axis solution for each eta in ``etas``."""
    m = np.empty(len(etas), dtype=complex)
    u = np.empty(len(etas), dtype=complex)
    for i, eta in enumerate(etas):
        p = solve_m(z, 1j * float(eta))
        m[i] = complex(p.m)
        u[i] = complex(p.u)
    return m, u


def _log_argument_raw(z1, z2, m1, u1, m2, u2):
    a12 = u1 * u2 * abs(z1) * abs(z2)
    rez = (z1 * np.conj(z2)).real
    return 1.0 + a12 ** 2 - (m1 * m2) ** 2 - 2.0 * u1 * u2 * rez


def _v_raw(z1, z2, m1, u1, m2, u2):
    az1 = abs(z1) ** 2
    az2 = abs(z2) ** 2
    a12sq = (u1 * u2) ** 2 * az1 * az2
    rez = (z1 * np.conj(z2)).real
    A = 1.0 + a12sq - (m1 * m2) ** 2 - 2.0 * u1 * u2 * rez
    t1 = 1.0 - m1 ** 2 - u1 ** 2 * az1
    t2 = 1.0 - m2 ** 2 - u2 ** 2 * az2
    s1 = m1 ** 2 - u1 ** 2 * az1
    s2 = m2 ** 2 - u2 ** 2 * az2
    num = 2.0 * m1 * m2 * (2.0 * u1 * u2 * rez + a12sq * (s1 * s2 - 4.0))
    num = num + 2.0 * m1 * m2 * (m1 ** 2 + u1 ** 2 * az1) * (m2 ** 2 + u2 ** 2 * az2)
    return num / (t1 * t2 * A ** 2), A


def stability_log_argument(z1: complex, z2: complex, eta1: float, eta2: float) -> complex:
    """The quantity A whose half log has mixed eta-derivative ``v_kernel``.

    A = 1 + (u1 u2 |z1||z2|)^2 - (m1 m2)^2 - 2 u1 u2 Re(z1 conj z2),
    with m_i, u_i evaluated at w = i eta_i.
    """
    p1 = solve_m(z1, 1j * float(eta1))
    p2 = solve_m(z2, 1j * float(eta2))
    return complex(_log_argument_raw(z1, z2, complex(p1.m), complex(p1.u),
                                     complex(p2.m), complex(p2.u)))


def v_kernel(z1: complex, z2: complex, eta1: float, eta2: float) -> complex:
    """Pair variance kernel V(z1, z2; eta1, eta2).

    Explicit rational expression; it equals (1/2) d^2/(d eta1 d eta2) of
    log of :func:`stability_log_argument` (tested by finite differences),
    and minus its double eta-integral over (0, infinity)^2 equals
    :func:`theta_closed`.

    Raises
    ------
    SingularityError
        If the denominator log-argument falls below 1e-12 in modulus
        (coincident points at vanishing eta).
    """
    p1 = solve_m(z1, 1j * float(eta1))
    p2 = solve_m(z2, 1j * float(eta2))
    v, A = _v_raw(z1, z2, complex(p1.m), complex(p1.u), complex(p2.m), complex(p2.u))
    if abs(A) <= _A_GUARD:
        raise SingularityError(
            f"pair kernel degenerate: |A|={abs(A):.3e} at z1={z1!r}, z2={z2!r}, "
            f"eta=({eta1!r}, {eta2!r})"
        )
    return complex(v)


def u_kernel(z: complex, eta: float) -> complex:
    """Expectation kernel U(z; eta) = (i/sqrt2) d(m^2)/d eta, in closed form.

    Uses the chain rule d m/d eta = i m' with the analytic w-derivative m'
    carried by the solver; no numerical differencing.
    """
    p = solve_m(z, 1j * float(eta))
    return complex(-np.sqrt(2.0) * p.m * p.m_prime)


def theta_closed(z1: complex, z2: complex) -> float:
    """Closed form of the double eta-integral kernel Theta(z1, z2).

    Three cases: both points in the closed unit disk -> -log|z1-z2|; one
    outside -> log|z_out| - log|z1-z2|; both outside -> log|z1 z2| -
    log|1 - z1 conj(z2)|.

    Raises
    ------
    SingularityError
        For coincident interior points or z1 conj(z2) = 1 outside.
    """
    z1 = complex(z1)
    z2 = complex(z2)
    in1 = abs(z1) <= 1.0
    in2 = abs(z2) <= 1.0
    if in1 and in2:
        d = abs(z1 - z2)
        if d == 0.0:
            raise SingularityError(f"coincident interior points z={z1!r}")
        return -np.log(d)
    if in1 != in2:
        d = abs(z1 - z2)
        out = abs(z2) if in1 else abs(z1)
        return np.log(out) - np.log(d)
    s = abs(1.0 - z1 * np.conj(z2))
    if s == 0.0:
        raise SingularityError(f"degenerate exterior pair z1={z1!r}, z2={z2!r}")
    return np.log(abs(z1 * z2)) - np.log(s)


def theta_quadrature(z1: complex, z2: complex, eta_min: float = 1e-6,
                     eta_max: float = 1e4, n_nodes: int = 80) -> float:
    """Minus the double eta-integral of V, by log-spaced Gauss quadrature.

    The per-eta solver outputs are computed once per z and reused across
    the tensor grid. Tail cut at ``eta_max``; the integrand decays like
    eta^-3 there.
    """
    nodes, weights = log_eta_grid(eta_min, eta_max, n_nodes)
    m1, u1 = _axis_point_arrays(z1, nodes)
    m2, u2 = _axis_point_arrays(z2, nodes)
    v, A = _v_raw(z1, z2, m1[:, None], u1[:, None], m2[None, :], u2[None, :])
    if np.min(np.abs(A)) <= _A_GUARD:
        raise SingularityError(
            f"pair kernel degenerate on the integration grid for z1={z1!r}, z2={z2!r}"
        )
    total = weights @ v @ weights
    return -float(np.real(total))


def u_integral(z: complex, eta_min: float = 1e-8, eta_max: float = 1e4,
               n_nodes: int = 160) -> complex:
    """Numeric eta-integral of U over (0, infinity), log-spaced Gauss rule."""
    az = abs(z) ** 2
    if az > 1.0:
        # Outside the unit disk the solver's absolute residual gate is only
        # attainable for eta above ~(|z|^2 - 1) * 4e-7 (extended-precision
        # cancellation floor). The integrand there is O(eta / (|z|^2 - 1)^2),
        # so the skipped initial segment contributes O(1e-12): far below the
        # 1e-6 accuracy this integral is quoted at.
        eta_min = max(eta_min, 1e-6 * (az - 1.0))
    nodes, weights = log_eta_grid(eta_min, eta_max, n_nodes)
    m, _ = _axis_point_arrays(z, nodes)
    vals = np.empty(len(nodes), dtype=complex)
    for i, eta in enumerate(nodes):
        vals[i] = u_kernel(z, float(eta))
    return complex(weights @ vals)


def u_integral_closed(z: complex) -> complex:
    """(i/sqrt2)(1 - |z|^2) inside the unit disk, 0 outside."""
    az = abs(z) ** 2
    if az >= 1.0:
        return 0j
    return 1j / np.sqrt(2.0) * (1.0 - az)


# ---------------------------------------------------------------------------
# Boundary Fourier analysis


@dataclass(frozen=True, eq=False)
class BoundarySpectrum:
    """Fourier coefficients of a function restricted to the unit circle.

    ``coeffs[j]`` holds the coefficient of e^{i k theta} with k = j - K.
    """

    coeffs: np.ndarray
    K: int

    def coeff(self, k: int) -> complex:
        if abs(k) > self.K:
            raise InvalidParameterError(f"|k|={abs(k)} exceeds cutoff K={self.K}")
        return complex(self.coeffs[k + self.K])

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)


def boundary_fourier(f: TestFunction, K: int, M: int | None = None) -> BoundarySpectrum:
    """Boundary Fourier coefficients f_hat(k) = (1/2pi) int f(e^{i t}) e^{-ikt} dt.

    Uniform-grid discrete transform, spectrally accurate for smooth f.
    ``M`` defaults to the smallest power of two with M >= 4K+4.
    """
    if K < 0:
        raise InvalidParameterError(f"cutoff K must be >= 0, got {K}")
    min_m = 4 * K + 4
    if M is None:
        M = 1 << (min_m - 1).bit_length()
    if M < min_m or (M & (M - 1)) != 0:
        raise InvalidParameterError(
            f"grid size M={M} must be a power of two with M >= 4K+4 = {min_m}"
        )
    theta = 2.0 * np.pi * np.arange(M) / M
    vals = f.value(np.exp(1j * theta))
    c = np.fft.fft(vals) / M
    coeffs = np.empty(2 * K + 1, dtype=complex)
    for k in range(-K, K + 1):
        coeffs[k + K] = c[k % M]
    return BoundarySpectrum(coeffs=coeffs, K=K)


def h_half_inner(g: BoundarySpectrum, f: BoundarySpectrum) -> complex:
    """Homogeneous H^{1/2} semi-inner product: sum |k| f_hat(k) conj(g_hat(k))."""
    if g.K != f.K:
        raise InvalidParameterError(f"mismatched cutoffs K={g.K} vs {f.K}")
    k = np.abs(np.arange(-f.K, f.K + 1))
    return complex(np.sum(k * f.coeffs * np.conj(g.coeffs)))


# ---------------------------------------------------------------------------
# Covariance functional and expectation correction


@dataclass(frozen=True, eq=False)
class CovarianceBreakdown:
    """Three-term decomposition of the limit covariance C(g, f)."""

    gradient_term: complex
    h_half_term: complex
    kappa4_term: complex
    total: complex


def covariance_functional(g: TestFunction, f: TestFunction, kappa4: float,
                          n_radial: int = 256, n_angular: int = 512,
                          fourier_cutoff: int = 128, rel_tol: float = 1e-4,
                          max_doublings: int = 2) -> CovarianceBreakdown:
    """Limit covariance C(g, f) = E L(f) conj(L(g)) with its breakdown.

    gradient_term = (1/4 pi) int_D (f_x conj(g_x) + f_y conj(g_y));
    h_half_term = (1/2) sum |k| f_hat(k) conj(g_hat(k));
    kappa4_term = kappa4 * conj(dm_g - bm_g) * (dm_f - bm_f), where dm is
    the disk mean (1/pi) int_D and bm the boundary mean.

    Disk quadrature resolution is doubled until every reported integral
    drifts by less than ``rel_tol`` relative; failure raises AccuracyError
    with the achieved drift.
    """

    def integrand(nodes):
        fx, fy = f.gradient(nodes)
        gx, gy = g.gradient(nodes)
        return {
            "grad": fx * np.conj(gx) + fy * np.conj(gy),
            "f": f.value(nodes),
            "g": g.value(nodes),
        }

    integrals, _ = converge_disk_integrals(integrand, radius=1.0,
                                           n_radial=n_radial, n_angular=n_angular,
                                           rel_tol=rel_tol, max_doublings=max_doublings)
    gradient_term = integrals["grad"] / (4.0 * np.pi)
    disk_f = integrals["f"] / np.pi
    disk_g = integrals["g"] / np.pi

    bf = boundary_fourier(f, fourier_cutoff)
    bg = boundary_fourier(g, fourier_cutoff)
    h_half_term = 0.5 * h_half_inner(bg, bf)
    kappa4_term = kappa4 * np.conj(disk_g - bg.coeff(0)) * (disk_f - bf.coeff(0))
    total = gradient_term + h_half_term + kappa4_term
    return CovarianceBreakdown(gradient_term=complex(gradient_term),
                               h_half_term=complex(h_half_term),
                               kappa4_term=complex(kappa4_term),
                               total=complex(total))


def expectation_correction(f: TestFunction, kappa4: float, n: int,
                           n_radial: int = 256, n_angular: int = 512,
                           rel_tol: float = 1e-4, max_doublings: int = 2):
    """Leading term and fourth-cumulant correction of E sum f(sigma_i).

    Returns ``(leading, correction)`` with leading = (n/pi) int_D f and
    correction = -(kappa4/pi) int_D f(z)(2|z|^2 - 1) d^2 z.
    """
    if n < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {n}")

    def integrand(nodes):
        vals = f.value(nodes)
        w = 2.0 * (nodes.real ** 2 + nodes.imag ** 2) - 1.0
        return {"f": vals, "fw": vals * w}

    integrals, _ = converge_disk_integrals(integrand, radius=1.0,
                                           n_radial=n_radial, n_angular=n_angular,
                                           rel_tol=rel_tol, max_doublings=max_doublings)
    leading = n / np.pi * integrals["f"]
    correction = -kappa4 / np.pi * integrals["fw"]
    return complex(leading), complex(correction)
