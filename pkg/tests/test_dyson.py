"""Self-consistent resolvent solver, density profile, and pair stability."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from rmtlab.dyson import (block_average, density_at, density_profile,
                          quantile, solve_m, solve_m_fixed_point,
                          two_body_stability, two_resolvent_approx)
from rmtlab.errors import (InvalidParameterError, OutOfMassError,
                           StabilityError)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0  # positive root of y^2 + y = 1


def _residual(z, w, m):
    one = np.clongdouble(1.0)
    wl = np.clongdouble(complex(w))
    z = complex(z)
    az = np.longdouble(z.real) ** 2 + np.longdouble(z.imag) ** 2
    return float(abs(one / m + wl + m - az / (wl + m)))


def test_origin_pinned_values():
    sol = solve_m(0.0, 1j)
    # At z = 0, w = i the scalar equation reduces to y^2 + y = 1 with m = iy.
    np.testing.assert_allclose(complex(sol.m), 1j * GOLDEN, rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(float(np.imag(sol.m)), 0.6180339887, atol=5e-11)
    np.testing.assert_allclose(float(np.real(sol.u)), (3.0 - np.sqrt(5.0)) / 2.0,
                               rtol=1e-13)
    np.testing.assert_allclose(float(np.real(sol.u)), 0.3819660113, atol=5e-11)
    y2 = GOLDEN**2
    np.testing.assert_allclose(float(np.real(sol.m_prime)), -y2 / (1.0 + y2),
                               rtol=1e-12)
    np.testing.assert_allclose(float(np.real(sol.m_prime)), -0.2763932023,
                               atol=5e-11)


def test_boundary_density_value():
    # |z| = 0.6 inside the disk: Im m(i0+) = sqrt(1 - |z|^2) = 0.8.
    sol = solve_m(0.6, 1e-9j)
    np.testing.assert_allclose(float(np.imag(sol.m)), 0.8, atol=1e-8)
    np.testing.assert_allclose(np.pi * density_at(0.6, 0.0), 0.8, rtol=1e-14)


def test_outside_disk_small_eta():
    sol = solve_m(1.5, 1e-6j)
    assert abs(complex(sol.m)) < 1e-5
    np.testing.assert_allclose(float(np.real(sol.u)), 1.0 / 1.5**2, rtol=1e-5)


def test_precision_floor_fails_loudly():
    # Outside the disk with very small eta the absolute residual target sits
    # below the extended-precision cancellation floor (~1e-10 here); the
    # solver must refuse rather than return an unverified root.
    from rmtlab.errors import ConvergenceError
    with pytest.raises(ConvergenceError):
        solve_m(1.5, 1e-9j)


@settings(max_examples=60)
@given(
    zr=st.floats(-1.5, 1.5),
    zi=st.floats(-1.5, 1.5),
    log_eta=st.floats(np.log(1e-6), np.log(10.0)),
)
def test_residual_property(zr, zi, log_eta):
    z = complex(zr, zi)
    eta = float(np.exp(log_eta))
    sol = solve_m(z, 1j * eta)
    assert _residual(z, 1j * eta, sol.m) <= 1e-12
    assert float(np.imag(sol.m)) > 0
    # Stability margin of the physical branch must be strictly positive.
    beta_star = 1.0 - abs(complex(sol.m)) ** 2 - abs(complex(sol.u)) ** 2 * abs(z) ** 2
    assert beta_star > 0
    np.testing.assert_allclose(float(np.real(sol.beta_star)), beta_star,
                               rtol=1e-10, atol=1e-13)


def test_lower_half_plane_mirror():
    up = solve_m(0.4, 0.05j)
    down = solve_m(0.4, -0.05j)
    np.testing.assert_allclose(complex(down.m), np.conj(complex(up.m)),
                               rtol=1e-13)


def test_off_axis_spectral_parameter():
    # General complex w exercises the non-axis route; check the same residual.
    for w in (0.3 + 0.2j, -1.1 + 0.7j, 0.05 + 1e-4j):
        for z in (0.0, 0.8, 1.4):
            sol = solve_m(z, w)
            assert _residual(z, w, sol.m) <= 1e-12
            assert float(np.imag(sol.m)) > 0


@settings(max_examples=40)
@given(
    zr=st.floats(-0.999, 0.999),
    zi=st.floats(-0.6, 0.6),
    log_eta=st.floats(np.log(1e-4), np.log(5.0)),
)
def test_imaginary_part_comparability(zr, zi, log_eta):
    # Inside the unit disk the imaginary part tracks the local scale
    # eta^(1/3) + |1 - |z|^2|^(1/2) within fixed constants.
    z = complex(zr, zi)
    if abs(z) > 0.999:
        z = z / abs(z) * 0.999
    eta = float(np.exp(log_eta))
    sol = solve_m(z, 1j * eta)
    scale = min(1.0, eta ** (1.0 / 3.0) + abs(1.0 - abs(z) ** 2) ** 0.5)
    assert scale / 10.0 <= float(np.imag(sol.m)) <= 10.0 * scale


def test_eta_derivative_matches_finite_difference():
    for z, eta in [(0.0, 0.5), (0.6, 0.2), (1.2, 0.8), (0.3 + 0.4j, 1.0)]:
        sol = solve_m(z, 1j * eta)
        h = 1e-5 * eta
        m_hi = solve_m(z, 1j * (eta + h), previous=complex(sol.m)).m
        m_lo = solve_m(z, 1j * (eta - h), previous=complex(sol.m)).m
        fd = (complex(m_hi) - complex(m_lo)) / (2.0 * h)
        np.testing.assert_allclose(1j * complex(sol.m_prime), fd, rtol=1e-4)


def test_cubic_and_fixed_point_agree():
    rng = np.random.default_rng(7)
    for _ in range(25):
        z = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
        eta = float(10.0 ** rng.uniform(-3, 0.5))
        a = complex(solve_m(z, 1j * eta).m)
        b = solve_m_fixed_point(z, 1j * eta)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-10)


def test_continuation_hint_consistent():
    prev = None
    for eta in np.geomspace(1.0, 1e-7, 40):
        prev = complex(solve_m(0.9, 1j * eta, previous=prev).m)
    np.testing.assert_allclose(prev.imag, np.sqrt(1.0 - 0.81), atol=1e-6)


def test_solver_validation():
    with pytest.raises(InvalidParameterError):
        solve_m(0.0, 0.0)
    with pytest.raises(InvalidParameterError):
        solve_m(0.0, -1.0)
    with pytest.raises(InvalidParameterError):
        solve_m_fixed_point(0.0, 2.0)


def test_density_pinned_and_symmetric():
    np.testing.assert_allclose(density_at(0.0, 0.0), 1.0 / np.pi, rtol=1e-14)
    np.testing.assert_allclose(density_at(0.6, 0.0), 0.8 / np.pi, rtol=1e-14)
    for E in (0.3, 0.9, 1.7):
        np.testing.assert_allclose(density_at(0.45, E), density_at(0.45, -E),
                                   rtol=1e-14)
    assert density_at(0.5, 3.0) == 0.0
    assert density_at(2.0, 0.0) == 0.0


def test_density_matches_small_eta_solver():
    for z, E in [(0.3, 0.5), (0.8, 1.2), (1.1, 0.9)]:
        target = density_at(z, E)
        if target == 0.0:
            continue
        sol = solve_m(z, E + 1e-9j)
        np.testing.assert_allclose(float(np.imag(sol.m)) / np.pi, target,
                                   atol=1e-7)


def test_density_total_mass():
    for z in (0.0, 0.7, 1.1):
        profile = density_profile(z)
        np.testing.assert_allclose(2.0 * profile.positive_mass, 1.0, atol=1e-6)
        mass, _ = quad(lambda E: density_at(z, E), 0.0, profile.upper_edge,
                       limit=200, epsabs=1e-9)
        np.testing.assert_allclose(mass, profile.positive_mass, atol=1e-8)


def test_quantiles():
    g1 = quantile(0.0, 1000, 1)
    # Cumulative density from zero reaches 1/1000 at roughly pi/1000
    # because the density at the origin is 1/pi.
    np.testing.assert_allclose(g1, np.pi / 1000.0, rtol=1e-3)
    assert quantile(0.0, 1000, -3) == -quantile(0.0, 1000, 3)
    assert quantile(0.0, 1000, 400) > g1


def test_quantile_validation():
    with pytest.raises(OutOfMassError):
        quantile(1.3, 1000, 600)
    with pytest.raises(InvalidParameterError):
        quantile(0.0, 1000, 0)
    with pytest.raises(InvalidParameterError):
        quantile(0.0, 0, 1)


def _rebuilt_b4(z1, z2, w1, w2):
    """Assemble the 4x4 stability matrix directly from the solver output."""
    p1 = solve_m(z1, w1)
    p2 = solve_m(z2, w2)
    m1, u1 = complex(p1.m), complex(p1.u)
    m2, u2 = complex(p2.m), complex(p2.u)
    zz = z1 * np.conj(z2)
    T1 = np.array([[u1 * u2 * zz, m1 * m2],
                   [m1 * m2, u1 * u2 * np.conj(zz)]])
    T2 = np.array([[-z1 * u1 * m2, -z2 * u2 * m1],
                   [-np.conj(z2) * u2 * m1, -np.conj(z1) * u1 * m2]])
    B4 = np.eye(4, dtype=complex)
    B4[:2, :2] -= T1
    B4[2:, :2] -= T2
    return B4


def test_pair_stability_block_eigenvalues():
    # The 4x4 reduction is block lower triangular, so its spectrum must be
    # {beta_hat, beta_hat_star, 1, 1} exactly; check against dense eigvals.
    cases = [((0.2, 0.5), (0.4 - 0.1j, 0.3)), ((0.9, 0.05), (0.2 + 0.6j, 0.8)),
             ((1.2, 1.0), (0.0, 0.01))]
    for (z1, e1), (z2, e2) in cases:
        stab = two_body_stability(z1, z2, 1j * e1, 1j * e2)
        got = np.sort_complex(np.linalg.eigvals(_rebuilt_b4(z1, z2, 1j * e1, 1j * e2)))
        want = np.sort_complex(np.array([stab.beta_hat, stab.beta_hat_star,
                                         1.0, 1.0]))
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-11)


def test_pair_stability_origin_pin():
    # z1 = 0 kills the angular coupling: the non-unit eigenvalues collapse
    # to 1 -+ m1 m2.
    stab = two_body_stability(0.0, 0.5, 0.3j, 0.7j)
    prod = complex(solve_m(0.0, 0.3j).m) * complex(solve_m(0.5, 0.7j).m)
    vals = np.sort_complex(np.array([stab.beta_hat, stab.beta_hat_star]))
    want = np.sort_complex(np.array([1.0 - prod, 1.0 + prod]))
    np.testing.assert_allclose(vals, want, rtol=1e-12)


def test_inverse_norm_bound_is_exact():
    stab = two_body_stability(0.3, 0.7 + 0.1j, 0.2j, 0.5j)
    B4 = _rebuilt_b4(0.3, 0.7 + 0.1j, 0.2j, 0.5j)
    np.testing.assert_allclose(stab.inv_norm_bound,
                               np.linalg.norm(np.linalg.inv(B4), 2),
                               rtol=1e-12)


@settings(max_examples=50)
@given(
    x1=st.floats(-1.2, 1.2), y1=st.floats(-1.2, 1.2),
    x2=st.floats(-1.2, 1.2), y2=st.floats(-1.2, 1.2),
    le1=st.floats(np.log(1e-3), 0.0), le2=st.floats(np.log(1e-3), 0.0),
)
def test_stability_gap_lower_bound(x1, y1, x2, y2, le1, le2):
    # |beta_hat * beta_hat_star| is bounded below by the squared distance of
    # the observation points plus the smaller local eta-scale.
    z1, z2 = complex(x1, y1), complex(x2, y2)
    e1, e2 = float(np.exp(le1)), float(np.exp(le2))
    stab = two_body_stability(z1, z2, 1j * e1, 1j * e2)
    im1 = float(np.imag(solve_m(z1, 1j * e1).m))
    im2 = float(np.imag(solve_m(z2, 1j * e2).m))
    floor = (e1 + e2) * min(im1, im2) ** 2 + abs(z1 - z2) ** 2
    assert abs(stab.beta_hat * stab.beta_hat_star) >= 1e-2 * floor


@settings(max_examples=50)
@given(
    x1=st.floats(-1.2, 1.2), y1=st.floats(-1.2, 1.2),
    x2=st.floats(-1.2, 1.2), y2=st.floats(-1.2, 1.2),
    le1=st.floats(np.log(1e-3), 0.0), le2=st.floats(np.log(1e-3), 0.0),
)
def test_pair_approx_controlled_by_inverse_norm(x1, y1, x2, y2, le1, le2):
    z1, z2 = complex(x1, y1), complex(x2, y2)
    w1, w2 = 1j * float(np.exp(le1)), 1j * float(np.exp(le2))
    stab = two_body_stability(z1, z2, w1, w2)
    M = two_resolvent_approx(z1, z2, w1, w2, np.eye(2))
    assert np.linalg.norm(M, 2) <= 10.0 * stab.inv_norm_bound


def test_pair_approx_structure():
    args = (0.2, 0.6, 0.4j, 0.3j)
    B = np.array([[0.7, 0.2 - 0.1j], [0.05j, -0.4]])
    M = two_resolvent_approx(*args, B)
    assert M.shape == (2, 2)
    # Linear in the middle factor.
    np.testing.assert_allclose(two_resolvent_approx(*args, 2.0 * B), 2.0 * M,
                               rtol=1e-12)
    # Solves the fixed-point relation it advertises: applying the forward
    # map 1 - M1 S[.] M2 to the descriptor recovers M1 B M2.
    p1 = solve_m(0.2, 0.4j)
    p2 = solve_m(0.6, 0.3j)
    M1 = np.array([[complex(p1.m), -0.2 * complex(p1.u)],
                   [-0.2 * complex(p1.u), complex(p1.m)]])
    M2 = np.array([[complex(p2.m), -0.6 * complex(p2.u)],
                   [-0.6 * complex(p2.u), complex(p2.m)]])
    E1 = np.diag([1.0, 0.0]).astype(complex)
    E2 = np.diag([0.0, 1.0]).astype(complex)
    forward = M - M1 @ (M[1, 1] * E1 + M[0, 0] * E2) @ M2
    np.testing.assert_allclose(forward, M1 @ B @ M2, rtol=1e-10, atol=1e-12)
    with pytest.raises(InvalidParameterError):
        two_resolvent_approx(*args, np.eye(3))


def test_pair_approx_degenerate_point_raises():
    stab = two_body_stability(0.6, 0.6, 1e-11j, 1e-11j)
    assert min(abs(stab.beta_hat), abs(stab.beta_hat_star)) < 1e-10
    with pytest.raises(StabilityError):
        two_resolvent_approx(0.6, 0.6, 1e-11j, 1e-11j, np.eye(2))


def test_block_average():
    M = np.array([[1.0 + 2.0j, 9.0], [9.0, 3.0 - 4.0j]])
    np.testing.assert_allclose(block_average(M), 2.0 - 1.0j, rtol=1e-15)
