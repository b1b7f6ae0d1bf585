"""Smooth compactly supported test functions with exact derivatives.

Every function is represented as an evaluator bundle: ``value``,
``gradient`` (pair of Cartesian partials) and ``laplacian``, all exact
closed forms (no internal differencing), vectorized over complex arrays.

The built-in families are

* ``monomial(k, l)``: z^k zbar^l times a radial C-infinity cutoff that is
  identically 1 up to ``inner`` and identically 0 beyond ``outer``;
* ``radial_gaussian(center, width)``: a Gaussian bump with an outer cutoff
  far in its tail, so compact support is exact;
* ``cos_mode(k)`` / ``sin_mode(k)``: boundary Fourier modes extended
  harmonically (r^k cos k theta etc.) and cut off like the monomials.

Functions built here carry a ``config`` dict so they can be reconstructed
in worker processes; see :func:`from_config`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import InvalidParameterError

__all__ = [
    "TestFunction",
    "monomial",
    "radial_gaussian",
    "cos_mode",
    "sin_mode",
    "combine",
    "conjugate",
    "from_config",
    "available_families",
]

_TINY_R = 1e-150


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Evaluator bundle for one smooth compactly supported function.

    ``value(z)``, ``laplacian(z)`` map a complex ndarray to a complex
    ndarray; ``gradient(z)`` returns the pair ``(df/dx, df/dy)``.
    ``radial_breakpoints`` lists radii where the radial profile changes
    analytic form (quadrature panels split there). ``config`` allows the
    function to be rebuilt from a plain dict in another process; it is
    None for ad-hoc user functions.
    """

    value: Callable
    gradient: Callable
    laplacian: Callable
    support_radius: float
    label: str
    radial_breakpoints: tuple = ()
    config: dict | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# C-infinity bump machinery


def _phi(s):
    """exp(-1/(s(1-s))) on (0,1), zero outside."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    mask = (s > 0.0) & (s < 1.0)
    sm = s[mask]
    out[mask] = np.exp(-1.0 / (sm * (1.0 - sm)))
    return out


def _phi_prime(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    mask = (s > 0.0) & (s < 1.0)
    sm = s[mask]
    out[mask] = np.exp(-1.0 / (sm * (1.0 - sm))) * (1.0 - 2.0 * sm) / (
        sm ** 2 * (1.0 - sm) ** 2
    )
    return out


_PHI_NORM = None
_GL_X, _GL_W = np.polynomial.legendre.leggauss(96)


def _phi_norm() -> float:
    global _PHI_NORM
    if _PHI_NORM is None:
        val, _ = quad(lambda s: float(_phi(s)), 0.0, 1.0, epsabs=1e-15, limit=200)
        _PHI_NORM = val
    return _PHI_NORM


def _phi_cumulative(t):
    """Vectorized integral of the bump from 0 to t for t in [0,1]."""
    t = np.asarray(t, dtype=float)
    s = 0.5 * t[..., None] * (_GL_X + 1.0)
    return 0.5 * t * (_phi(s) @ _GL_W)


def _step_down(t):
    """C-infinity transition: 1 for t <= 0, 0 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    out[t >= 1.0] = 0.0
    mask = (t > 0.0) & (t < 1.0)
    out[mask] = 1.0 - _phi_cumulative(t[mask]) / _phi_norm()
    return out


def _cutoff_profile(r, inner, outer):
    """Radial cutoff c(r) and its first two derivatives."""
    r = np.asarray(r, dtype=float)
    width = outer - inner
    t = (r - inner) / width
    c = _step_down(t)
    c1 = np.zeros_like(r)
    c2 = np.zeros_like(r)
    mask = (t > 0.0) & (t < 1.0)
    norm = _phi_norm()
    c1[mask] = -_phi(t[mask]) / (norm * width)
    c2[mask] = -_phi_prime(t[mask]) / (norm * width ** 2)
    return c, c1, c2


# ---------------------------------------------------------------------------
# Families


def _check_cutoff(inner, outer):
    if not (0.0 < inner < outer):
        raise InvalidParameterError(
            f"cutoff radii must satisfy 0 < inner < outer, got ({inner}, {outer})"
        )


def monomial(k: int, l: int, inner: float = 1.05, outer: float = 1.15) -> TestFunction:
    """z^k zbar^l times the radial cutoff (1 up to ``inner``, 0 beyond ``outer``)."""
    if k < 0 or l < 0 or k != int(k) or l != int(l):
        raise InvalidParameterError(f"monomial powers must be integers >= 0, got ({k}, {l})")
    _check_cutoff(inner, outer)
    k, l = int(k), int(l)

    def value(z):
        z = np.asarray(z, dtype=complex)
        c, _, _ = _cutoff_profile(np.abs(z), inner, outer)
        return z ** k * np.conj(z) ** l * c

    def gradient(z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        safe = np.where(r > _TINY_R, r, 1.0)
        c, c1, _ = _cutoff_profile(r, inner, outer)
        g = z ** k * np.conj(z) ** l
        dgx = np.zeros_like(z)
        dgy = np.zeros_like(z)
        if k >= 1:
            term = k * z ** (k - 1) * np.conj(z) ** l
            dgx = dgx + term
            dgy = dgy + 1j * term
        if l >= 1:
            term = l * z ** k * np.conj(z) ** (l - 1)
            dgx = dgx + term
            dgy = dgy - 1j * term
        fx = dgx * c + g * c1 * np.real(z) / safe
        fy = dgy * c + g * c1 * np.imag(z) / safe
        return fx, fy

    def laplacian(z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        safe = np.where(r > _TINY_R, r, 1.0)
        c, c1, c2 = _cutoff_profile(r, inner, outer)
        g = z ** k * np.conj(z) ** l
        out = np.zeros_like(z)
        if k >= 1 and l >= 1:
            out = out + 4.0 * k * l * z ** (k - 1) * np.conj(z) ** (l - 1) * c
        # 2 grad(g).grad(c) = 2 (k+l) g c'/r, plus g (c'' + c'/r)
        out = out + g * (c2 + (2.0 * (k + l) + 1.0) * c1 / safe)
        return out

    label = f"monomial({k},{l})"
    cfg = {"family": "monomial", "params": {"k": k, "l": l, "inner": inner, "outer": outer}}
    return TestFunction(value=value, gradient=gradient, laplacian=laplacian,
                        support_radius=outer, label=label,
                        radial_breakpoints=(inner, outer), config=cfg)


def radial_gaussian(center: complex = 0j, width: float = 0.5) -> TestFunction:
    """Gaussian bump exp(-|z-center|^2/width^2) with an exact far-tail cutoff.

    ``width`` is the mesoscopic scale knob. The cutoff plateau ends at
    |center| + 6 width, where the Gaussian is ~1e-16 of its peak, so the
    cutoff correction is below double-precision resolution while making
    the support genuinely compact.
    """
    center = complex(center)
    if width <= 0:
        raise InvalidParameterError(f"width must be positive, got {width}")
    inner = abs(center) + 6.0 * width
    outer = abs(center) + 7.0 * width
    w2 = width * width

    def _core(z):
        z = np.asarray(z, dtype=complex)
        d = z - center
        return d, np.exp(-(d.real ** 2 + d.imag ** 2) / w2)

    def value(z):
        z = np.asarray(z, dtype=complex)
        d, g = _core(z)
        c, _, _ = _cutoff_profile(np.abs(z), inner, outer)
        return (g * c).astype(complex)

    def gradient(z):
        z = np.asarray(z, dtype=complex)
        d, g = _core(z)
        r = np.abs(z)
        safe = np.where(r > _TINY_R, r, 1.0)
        c, c1, _ = _cutoff_profile(r, inner, outer)
        gx = -2.0 * d.real / w2 * g
        gy = -2.0 * d.imag / w2 * g
        fx = gx * c + g * c1 * np.real(z) / safe
        fy = gy * c + g * c1 * np.imag(z) / safe
        return fx.astype(complex), fy.astype(complex)

    def laplacian(z):
        z = np.asarray(z, dtype=complex)
        d, g = _core(z)
        r = np.abs(z)
        safe = np.where(r > _TINY_R, r, 1.0)
        c, c1, c2 = _cutoff_profile(r, inner, outer)
        dd = d.real ** 2 + d.imag ** 2
        lap_g = (4.0 * dd / (w2 * w2) - 4.0 / w2) * g
        gx = -2.0 * d.real / w2 * g
        gy = -2.0 * d.imag / w2 * g
        cross = 2.0 * (gx * np.real(z) + gy * np.imag(z)) * c1 / safe
        return (lap_g * c + cross + g * (c2 + c1 / safe)).astype(complex)

    label = f"radial_gaussian(center={center}, width={width})"
    cfg = {"family": "radial_gaussian",
           "params": {"center": [center.real, center.imag], "width": width}}
    return TestFunction(value=value, gradient=gradient, laplacian=laplacian,
                        support_radius=outer, label=label,
                        radial_breakpoints=(inner, outer), config=cfg)


def combine(terms: list, label: str) -> TestFunction:
    """Finite linear combination of test functions (coeff, function) pairs."""
    terms = [(complex(c), f) for c, f in terms]

    def value(z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c, f in terms:
            out = out + c * f.value(z)
        return out

    def gradient(z):
        z = np.asarray(z, dtype=complex)
        fx = np.zeros_like(z)
        fy = np.zeros_like(z)
        for c, f in terms:
            gx, gy = f.gradient(z)
            fx = fx + c * gx
            fy = fy + c * gy
        return fx, fy

    def laplacian(z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c, f in terms:
            out = out + c * f.laplacian(z)
        return out

    support = max((f.support_radius for _, f in terms), default=1.0)
    breaks = sorted({b for _, f in terms for b in f.radial_breakpoints})
    sub_cfgs = [f.config for _, f in terms]
    cfg = None
    if all(s is not None for s in sub_cfgs):
        cfg = {"family": "combine",
               "params": {"label": label,
                          "terms": [[[c.real, c.imag], s] for (c, _), s in zip(terms, sub_cfgs)]}}
    return TestFunction(value=value, gradient=gradient, laplacian=laplacian,
                        support_radius=support, label=label,
                        radial_breakpoints=tuple(breaks), config=cfg)


def cos_mode(k: int, inner: float = 1.05, outer: float = 1.15) -> TestFunction:
    """r^k cos(k theta) extended harmonically inward, cut off outside."""
    if k < 1:
        raise InvalidParameterError(f"mode index must be >= 1, got {k}")
    f = combine([(0.5, monomial(k, 0, inner, outer)),
                 (0.5, monomial(0, k, inner, outer))], label=f"cos_mode({k})")
    cfg = {"family": "cos_mode", "params": {"k": int(k), "inner": inner, "outer": outer}}
    return TestFunction(value=f.value, gradient=f.gradient, laplacian=f.laplacian,
                        support_radius=f.support_radius, label=f.label,
                        radial_breakpoints=f.radial_breakpoints, config=cfg)


def sin_mode(k: int, inner: float = 1.05, outer: float = 1.15) -> TestFunction:
    """r^k sin(k theta) extended harmonically inward, cut off outside."""
    if k < 1:
        raise InvalidParameterError(f"mode index must be >= 1, got {k}")
    f = combine([(-0.5j, monomial(k, 0, inner, outer)),
                 (0.5j, monomial(0, k, inner, outer))], label=f"sin_mode({k})")
    cfg = {"family": "sin_mode", "params": {"k": int(k), "inner": inner, "outer": outer}}
    return TestFunction(value=f.value, gradient=f.gradient, laplacian=f.laplacian,
                        support_radius=f.support_radius, label=f.label,
                        radial_breakpoints=f.radial_breakpoints, config=cfg)


def conjugate(f: TestFunction) -> TestFunction:
    """Pointwise complex conjugate of a test function."""

    def value(z):
        return np.conj(f.value(z))

    def gradient(z):
        fx, fy = f.gradient(z)
        return np.conj(fx), np.conj(fy)

    def laplacian(z):
        return np.conj(f.laplacian(z))

    cfg = None
    if f.config is not None:
        cfg = {"family": "conjugate", "params": {"inner": f.config}}
    return TestFunction(value=value, gradient=gradient, laplacian=laplacian,
                        support_radius=f.support_radius, label=f"conj({f.label})",
                        radial_breakpoints=f.radial_breakpoints, config=cfg)


# ---------------------------------------------------------------------------
# Registry


def _build_monomial(**p):
    return monomial(**p)


def _build_radial_gaussian(center=(0.0, 0.0), width=0.5):
    if isinstance(center, (list, tuple)):
        center = complex(center[0], center[1])
    return radial_gaussian(center=center, width=width)


def _build_combine(label, terms):
    built = [(complex(c[0], c[1]), from_config(sub)) for c, sub in terms]
    return combine(built, label=label)


def _build_conjugate(inner):
    return conjugate(from_config(inner))


_FAMILIES = {
    "monomial": _build_monomial,
    "radial_gaussian": _build_radial_gaussian,
    "cos_mode": cos_mode,
    "sin_mode": sin_mode,
    "combine": _build_combine,
    "conjugate": _build_conjugate,
}

_SHORTCUTS = {
    "cutoff": {"family": "monomial", "params": {"k": 0, "l": 0}},
    "z_cutoff": {"family": "monomial", "params": {"k": 1, "l": 0}},
    "zsq_cutoff": {"family": "monomial", "params": {"k": 2, "l": 0}},
    "abs2_cutoff": {"family": "monomial", "params": {"k": 1, "l": 1}},
    "radial_bump": {"family": "radial_gaussian", "params": {}},
}


def available_families() -> list:
    """Names accepted by :func:`from_config` (families plus shortcuts)."""
    return sorted(_FAMILIES) + sorted(_SHORTCUTS)


def from_config(cfg) -> TestFunction:
    """Build a test function from a config dict or shortcut name.

    Accepts ``{"family": name, "params": {...}}``, a bare family/shortcut
    name string, or an existing TestFunction (returned unchanged).
    """
    if isinstance(cfg, TestFunction):
        return cfg
    if isinstance(cfg, str):
        if cfg in _SHORTCUTS:
            cfg = _SHORTCUTS[cfg]
        else:
            cfg = {"family": cfg, "params": {}}
    family = cfg.get("family")
    params = dict(cfg.get("params", {}))
    if family in _SHORTCUTS:
        base = _SHORTCUTS[family]
        merged = dict(base["params"])
        merged.update(params)
        family, params = base["family"], merged
    if family not in _FAMILIES:
        raise InvalidParameterError(
            f"unknown test-function family {family!r}; known: {available_families()}"
        )
    return _FAMILIES[family](**params)
