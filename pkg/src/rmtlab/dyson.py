"""Self-consistent resolvent theory at a single point and for pairs.

The scalar self-consistency equation used throughout is

    -1/m = w + m - |z|^2 / (w + m),        Im w * Im m > 0,

whose companion quantities are ``u = m/(w+m)``, the stability scalars
``beta = 1 - m^2 - u^2 |z|^2`` and ``beta_star = 1 - |m|^2 - |u|^2 |z|^2``,
and the w-derivative ``m' = (1 - beta)/beta``.

Clearing denominators turns the equation into the cubic

    m^3 + 2 w m^2 + (w^2 + 1 - |z|^2) m + w = 0,

so roots can be enumerated exactly and the physical branch selected by the
sign condition. Residuals down to 1e-12 are required even where the
equation's conditioning reaches ~1e12 (small Im w outside the unit disk);
roots are therefore Newton-polished and stored in extended precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import (
    ConvergenceError,
    InvalidParameterError,
    OutOfMassError,
    StabilityError,
)

__all__ = [
    "DysonPoint",
    "TwoBodyStability",
    "DensityProfile",
    "solve_m",
    "solve_m_fixed_point",
    "dyson_residual",
    "two_body_stability",
    "two_resolvent_approx",
    "block_average",
    "density_at",
    "density_profile",
    "quantile",
]

_CPLX = np.clongdouble
_REAL = np.longdouble

RESIDUAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DysonPoint:
    """Solution bundle of the scalar self-consistency equation.

    The fields ``m``, ``u``, ``beta``, ``beta_star``, ``m_prime`` are numpy
    extended-precision scalars (``clongdouble``); cast with ``complex(...)``
    where double precision suffices.
    """

    z: complex
    w: complex
    m: np.clongdouble
    u: np.clongdouble
    beta: np.clongdouble
    beta_star: np.clongdouble
    m_prime: np.clongdouble
    residual: float


def dyson_residual(z: complex, w: complex, m) -> float:
    """|1/m + w + m - |z|^2/(w+m)| evaluated in extended precision."""
    mc = _CPLX(m)
    wc = _CPLX(complex(w))
    az = _REAL(np.real(z)) ** 2 + _REAL(np.imag(z)) ** 2
    r = 1.0 / mc + wc + mc - az / (wc + mc)
    return float(np.abs(r))


def _derived_point(z: complex, w: complex, m) -> DysonPoint:
    mc = _CPLX(m)
    wc = _CPLX(complex(w))
    az = _REAL(np.real(z)) ** 2 + _REAL(np.imag(z)) ** 2
    u = mc / (wc + mc)
    beta = 1.0 - mc * mc - u * u * az
    abs_m2 = np.real(mc) ** 2 + np.imag(mc) ** 2
    abs_u2 = np.real(u) ** 2 + np.imag(u) ** 2
    beta_star = _CPLX(1.0 - abs_m2 - abs_u2 * az)
    m_prime = (1.0 - beta) / beta
    res = dyson_residual(z, w, mc)
    return DysonPoint(z=complex(z), w=complex(w), m=mc, u=u, beta=beta,
                      beta_star=beta_star, m_prime=m_prime, residual=res)


def _newton_imag_axis(y0, eta, az, steps: int = 8):
    """Polish the positive root of the on-axis real cubic in long double.

    Solves ``R(y) = y + eta - 1/y + az/(y + eta) = 0`` (the imaginary part
    of the defining equation at ``w = i eta``, ``m = i y``).
    """
    y = _REAL(y0)
    eta = _REAL(eta)
    az = _REAL(az)
    for _ in range(steps):
        r = y + eta - 1.0 / y + az / (y + eta)
        dr = 1.0 + 1.0 / (y * y) - az / ((y + eta) * (y + eta))
        step = r / dr
        y_new = y - step
        if y_new <= 0:
            y_new = y / 2.0
        y = y_new
    return y


def _newton_complex(m0, w, az, steps: int = 8):
    m = _CPLX(m0)
    wc = _CPLX(complex(w))
    az = _REAL(az)
    for _ in range(steps):
        f = 1.0 / m + wc + m - az / (wc + m)
        df = -1.0 / (m * m) + 1.0 + az / ((wc + m) * (wc + m))
        m = m - f / df
    return m


def solve_m(z: complex, w: complex, previous: complex | None = None) -> DysonPoint:
    """Solve the scalar self-consistency equation at spectral parameter ``w``.

    Parameters
    ----------
    z : complex
        Shift parameter.
    w : complex
        Spectral parameter with ``Im w != 0`` (use :func:`density_at` for
        the real-axis limit).
    previous : complex, optional
        Continuation hint; among sign-admissible roots the one closest to
        ``previous`` is chosen (relevant only in corner cases where rounding
        makes more than one root pass the sign test).

    Raises
    ------
    ConvergenceError
        If no root satisfies the sign condition after polishing, or the
        residual target cannot be met.
    """
    w = complex(w)
    if w.imag == 0.0:
        raise InvalidParameterError("solve_m requires Im w != 0; see density_at")
    # Single extended-precision definition of |z|^2, shared by the polish and
    # the residual gate. A double-rounded az solves a slightly different
    # equation, which the gate amplifies by 1/|w+m| when m is small.
    az = _REAL(np.real(z)) ** 2 + _REAL(np.imag(z)) ** 2

    if w.real == 0.0:
        # Pure imaginary axis: m = i y with y solving a real cubic; there is
        # exactly one root with y * Im w > 0 (Descartes' rule).
        eta = abs(w.imag)
        roots = np.roots([1.0, 2.0 * eta, eta * eta + float(az) - 1.0, -eta])
        candidates = [r.real for r in roots if r.real > 0.0]
        if not candidates:
            raise ConvergenceError(
                f"no positive root for z={z!r}, w={w!r}; roots={roots!r}"
            )
        best = None
        for y0 in candidates:
            y = _newton_imag_axis(y0, eta, az)
            res = abs(float(y + eta - 1.0 / y + az / (y + eta)))
            if best is None or res < best[1]:
                best = (y, res)
        y = best[0]
        m = _CPLX(1j) * y
        if w.imag < 0:
            m = -m
        point = _derived_point(z, w, m)
    else:
        roots = np.roots([1.0, 2.0 * w, w * w + 1.0 - float(az), w])
        polished = [_newton_complex(r, w, az) for r in roots]
        admissible = [m for m in polished if float(np.imag(m)) * w.imag > 0.0]
        if not admissible:
            detail = ", ".join(
                f"m={complex(m):.6g} residual={dyson_residual(z, w, m):.3e}"
                for m in polished
            )
            raise ConvergenceError(
                f"no sign-admissible root for z={z!r}, w={w!r}: {detail}"
            )
        if previous is not None and len(admissible) > 1:
            admissible.sort(key=lambda m: abs(complex(m) - complex(previous)))
            m = admissible[0]
        else:
            m = min(admissible, key=lambda m: dyson_residual(z, w, m))
        point = _derived_point(z, w, m)

    if point.residual > RESIDUAL_TOL:
        m = _newton_complex(point.m, w, az, steps=16)
        point = _derived_point(z, w, m)
        if point.residual > RESIDUAL_TOL:
            raise ConvergenceError(
                f"residual {point.residual:.3e} above {RESIDUAL_TOL:.1e} "
                f"for z={z!r}, w={w!r}"
            )
    if float(np.real(point.beta_star)) <= 0.0:
        raise ConvergenceError(
            f"selected root violates the strict bound |m|^2+|u|^2|z|^2 < 1 "
            f"at z={z!r}, w={w!r}"
        )
    return point


def solve_m_fixed_point(z: complex, w: complex, damping: float = 0.5,
                        tol: float = 1e-13, max_iter: int = 200000) -> complex:
    """Damped fixed-point iteration for the same equation (cross-check route).

    Slower and less robust near the spectral edge than the cubic route; used
    to confirm both methods agree where both converge.
    """
    w = complex(w)
    if w.imag == 0.0:
        raise InvalidParameterError("fixed-point route requires Im w != 0")
    az = abs(z) ** 2
    m = 1j * (0.5 if w.imag > 0 else -0.5)
    for _ in range(max_iter):
        g = -1.0 / (w + m - az / (w + m))
        m_new = (1.0 - damping) * m + damping * g
        if abs(m_new - m) < tol:
            return m_new
        m = m_new
    raise ConvergenceError(f"fixed-point iteration stalled at z={z!r}, w={w!r}")


@dataclass(frozen=True, eq=False)
class TwoBodyStability:
    """Spectral data of the 4x4 reduction of the pair stability operator."""

    z1: complex
    z2: complex
    w1: complex
    w2: complex
    beta_hat: complex
    beta_hat_star: complex
    inv_norm_bound: float


def _pair_points(z1, z2, w1, w2):
    return solve_m(z1, w1), solve_m(z2, w2)


def _m_matrix(z, point) -> np.ndarray:
    m = complex(point.m)
    u = complex(point.u)
    return np.array([[m, -z * u], [-np.conj(z) * u, m]], dtype=complex)


def _t_blocks(z1, z2, p1, p2):
    m1, u1 = complex(p1.m), complex(p1.u)
    m2, u2 = complex(p2.m), complex(p2.u)
    zz = z1 * np.conj(z2)
    T1 = np.array([[u1 * u2 * zz, m1 * m2],
                   [m1 * m2, u1 * u2 * np.conj(zz)]], dtype=complex)
    T2 = np.array([[-z1 * u1 * m2, -z2 * u2 * m1],
                   [-np.conj(z2) * u2 * m1, -np.conj(z1) * u1 * m2]], dtype=complex)
    return T1, T2


def two_body_stability(z1: complex, z2: complex, w1: complex, w2: complex) -> TwoBodyStability:
    """Closed-form eigenvalues and exact inverse norm of the pair stability map.

    The pair stability operator acts on block-constant observables through a
    4-dimensional reduction in the coordinates ``(r11, r22, r12, r21)``; its
    non-unit eigenvalues are

        1 - u1 u2 Re(z1 conj z2) -+ sqrt((m1 m2)^2 - (u1 u2 Im(z1 conj z2))^2).

    ``inv_norm_bound`` is the exact spectral norm of the inverse 4x4 matrix,
    not an analytic proxy.
    """
    p1, p2 = _pair_points(z1, z2, w1, w2)
    m1, u1 = complex(p1.m), complex(p1.u)
    m2, u2 = complex(p2.m), complex(p2.u)
    zz = z1 * np.conj(z2)
    mean = u1 * u2 * zz.real
    disc = (m1 * m2) ** 2 - (u1 * u2 * zz.imag) ** 2
    s = np.sqrt(complex(disc))
    beta_hat = 1.0 - mean - s
    beta_hat_star = 1.0 - mean + s
    T1, T2 = _t_blocks(z1, z2, p1, p2)
    B4 = np.eye(4, dtype=complex)
    B4[:2, :2] -= T1
    B4[2:, :2] -= T2
    try:
        inv_norm = float(np.linalg.norm(np.linalg.inv(B4), 2))
    except np.linalg.LinAlgError as exc:
        raise StabilityError(f"pair stability matrix is singular: {exc}") from exc
    return TwoBodyStability(z1=complex(z1), z2=complex(z2), w1=complex(w1),
                            w2=complex(w2), beta_hat=complex(beta_hat),
                            beta_hat_star=complex(beta_hat_star),
                            inv_norm_bound=inv_norm)


def two_resolvent_approx(z1: complex, z2: complex, w1: complex, w2: complex,
                         B: np.ndarray) -> np.ndarray:
    """Deterministic approximation of a resolvent-product observable.

    For a block-constant middle factor described by the 2x2 matrix ``B``,
    returns the 2x2 descriptor of
    ``(1 - M1 S[.] M2)^{-1} [M1 B M2]`` computed through the 4-dimensional
    partial-trace reduction. ``S`` takes block-normalized partial traces:
    ``S[R] = (tr R_22 / n) E_1 + (tr R_11 / n) E_2``.

    Raises
    ------
    StabilityError
        If either non-unit eigenvalue of the stability map is below 1e-10
        in modulus.
    """
    B = np.asarray(B, dtype=complex)
    if B.shape != (2, 2):
        raise InvalidParameterError("B descriptor must be 2x2")
    stab = two_body_stability(z1, z2, w1, w2)
    if min(abs(stab.beta_hat), abs(stab.beta_hat_star)) < 1e-10:
        raise StabilityError(
            f"stability eigenvalues too small: beta_hat={stab.beta_hat:.3e}, "
            f"beta_hat_star={stab.beta_hat_star:.3e}"
        )
    p1, p2 = _pair_points(z1, z2, w1, w2)
    M1 = _m_matrix(z1, p1)
    M2 = _m_matrix(z2, p2)
    rhs = M1 @ B @ M2
    x = np.array([rhs[0, 0], rhs[1, 1], rhs[0, 1], rhs[1, 0]], dtype=complex)
    T1, T2 = _t_blocks(z1, z2, p1, p2)
    B4 = np.eye(4, dtype=complex)
    B4[:2, :2] -= T1
    B4[2:, :2] -= T2
    y = np.linalg.solve(B4, x)
    return np.array([[y[0], y[2]], [y[3], y[1]]], dtype=complex)


def block_average(descriptor: np.ndarray) -> complex:
    """Global normalized trace of a block-constant operator: mean of the diagonal."""
    d = np.asarray(descriptor)
    return complex(0.5 * (d[0, 0] + d[1, 1]))


def density_at(z: complex, E: float) -> float:
    """Self-consistent spectral density ``pi^-1 Im m(E + i0+)``.

    Evaluated through the exact cubic at real spectral parameter; the sign
    of the cubic discriminant decides support membership, so no small-eta
    extrapolation or threshold enters.
    """
    az = abs(z) ** 2
    b = 2.0 * E
    c = E * E + 1.0 - az
    d = E
    # Discriminant of x^3 + b x^2 + c x + d: three real roots iff >= 0.
    disc = (
        18.0 * b * c * d - 4.0 * b ** 3 * d + (b * c) ** 2
        - 4.0 * c ** 3 - 27.0 * d ** 2
    )
    if disc >= 0.0:
        return 0.0
    roots = np.roots([1.0, b, c, d])
    return float(np.max(roots.imag)) / np.pi


@dataclass(eq=False)
class DensityProfile:
    """Cached density/quantile evaluator at fixed shift ``z``."""

    z: complex
    upper_edge: float
    positive_mass: float

    def rho(self, E: float) -> float:
        return density_at(self.z, E)

    def cumulative(self, E: float) -> float:
        """``int_0^E rho`` (signed for negative ``E``)."""
        if E == 0.0:
            return 0.0
        val, _ = quad(self.rho, 0.0, E, epsabs=1e-12, epsrel=1e-10, limit=200)
        return val

    def quantile(self, n: int, i: int) -> float:
        if n < 1:
            raise InvalidParameterError(f"dimension must be >= 1, got {n}")
        if i == 0:
            raise InvalidParameterError("quantile index must be a nonzero signed integer")
        t = abs(i) / n
        if t > self.positive_mass - 1e-10:
            raise OutOfMassError(
                f"index {i} of n={n} requests cumulative mass {t:.6f}, beyond "
                f"the available positive-side mass {self.positive_mass:.6f}"
            )
        gamma = brentq(lambda E: self.cumulative(E) - t, 0.0, self.upper_edge,
                       xtol=1e-13, rtol=1e-15)
        return float(np.copysign(gamma, i))


@lru_cache(maxsize=128)
def density_profile(z: complex) -> DensityProfile:
    """Build (and cache) the density profile at shift ``z``."""
    z = complex(z)
    edge = 2.0 + abs(z) + 0.5  # safe outer bound for the support
    mass, _ = quad(lambda E: density_at(z, E), 0.0, edge,
                   epsabs=1e-12, epsrel=1e-10, limit=200)
    return DensityProfile(z=z, upper_edge=edge, positive_mass=mass)


def quantile(z: complex, n: int, i: int) -> float:
    """Location whose cumulative density from zero equals ``i/n`` (signed)."""
    return density_profile(complex(z)).quantile(n, i)
