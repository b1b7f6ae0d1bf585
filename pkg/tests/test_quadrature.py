"""Disk and log-spaced quadrature rules: exactness and convergence control."""

import numpy as np
import pytest

from rmtlab.errors import AccuracyError, InvalidParameterError
from rmtlab.quadrature import (converge_disk_integrals, disk_grid,
                               disk_integral, log_eta_grid)


def test_weights_sum_to_area():
    g = disk_grid(2.0, 32, 64)
    np.testing.assert_allclose(np.sum(g.weights), np.pi * 4.0, rtol=1e-13)


def test_polynomial_exactness():
    # int_{|z|<1} |z|^2 = pi/2, |z|^4 = pi/3, x^2 = pi/4; the Gauss radial
    # rule handles these degrees exactly and the angular rule is exact for
    # low trigonometric modes.
    g = disk_grid(1.0, 16, 32)
    z = g.nodes
    np.testing.assert_allclose(disk_integral(np.abs(z) ** 2, g), np.pi / 2, rtol=1e-13)
    np.testing.assert_allclose(disk_integral(np.abs(z) ** 4, g), np.pi / 3, rtol=1e-13)
    np.testing.assert_allclose(disk_integral(z.real ** 2, g), np.pi / 4, rtol=1e-13)


def test_angular_modes_vanish():
    g = disk_grid(1.0, 16, 32)
    for k in (1, 2, 5):
        val = disk_integral(g.nodes ** k, g)
        assert abs(val) < 1e-14


def test_gaussian_integral():
    g = disk_grid(2.0, 64, 64)
    val = disk_integral(np.exp(-np.abs(g.nodes) ** 2), g)
    np.testing.assert_allclose(val, np.pi * (1.0 - np.exp(-4.0)), rtol=1e-12)


def test_spacing_property():
    g = disk_grid(1.0, 10, 100)
    assert g.spacing == pytest.approx(0.1)


def test_invalid_grid_parameters():
    with pytest.raises(InvalidParameterError):
        disk_grid(-1.0, 8, 8)
    with pytest.raises(InvalidParameterError):
        disk_grid(1.0, 0, 8)


def test_converge_returns_drift():
    vals, drift = converge_disk_integrals(
        lambda z: {"a": np.abs(z) ** 2}, radius=1.0, n_radial=8, n_angular=16,
        rel_tol=1e-10, max_doublings=2,
    )
    np.testing.assert_allclose(vals["a"], np.pi / 2, rtol=1e-12)
    assert 0.0 <= drift < 1e-10


def test_converge_raises_with_achieved_drift():
    # Zero allowed doublings can never certify convergence.
    with pytest.raises(AccuracyError) as err:
        converge_disk_integrals(
            lambda z: {"a": np.abs(z)}, radius=1.0, n_radial=8, n_angular=16,
            rel_tol=1e-14, max_doublings=0,
        )
    assert err.value.achieved > 1e-14


def test_converge_rough_integrand_fails_then_converges():
    def rough(z):
        return {"a": np.cos(40.0 * np.abs(z) ** 2)}

    with pytest.raises(AccuracyError):
        converge_disk_integrals(rough, radius=1.0, n_radial=4, n_angular=8,
                                rel_tol=1e-12, max_doublings=1)
    vals, drift = converge_disk_integrals(rough, radius=1.0, n_radial=32,
                                          n_angular=32, rel_tol=1e-9,
                                          max_doublings=3)
    assert drift < 1e-9
    assert np.isfinite(complex(vals["a"]).real)


def test_log_eta_grid_log_integral():
    # int_a^b (1/eta) d eta = log(b/a) is exact for the transformed rule.
    eta, w = log_eta_grid(1e-6, 1e3, 40)
    np.testing.assert_allclose(np.sum(w / eta), np.log(1e9), rtol=1e-13)


def test_log_eta_grid_powers():
    eta, w = log_eta_grid(1e-3, 10.0, 120)
    np.testing.assert_allclose(np.sum(w * eta), (100.0 - 1e-6) / 2.0, rtol=1e-10)
    np.testing.assert_allclose(np.sum(w / np.sqrt(eta)),
                               2.0 * (np.sqrt(10.0) - np.sqrt(1e-3)), rtol=1e-10)


def test_log_eta_grid_validation():
    with pytest.raises(InvalidParameterError):
        log_eta_grid(0.0, 1.0, 8)
    with pytest.raises(InvalidParameterError):
        log_eta_grid(2.0, 1.0, 8)
