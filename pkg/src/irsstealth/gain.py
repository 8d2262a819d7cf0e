"""Reflection gain in the angular domain and window sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import AngularWindow, ArrayGeometry, SpatialFrequencyPair, ula_steering, upa_response


@dataclass(frozen=True)
class TargetRcs:
    """Isotropic complex RCS ``4 pi S^2 / lam^2 * exp(i xi)`` of the bare target."""

    surface_area: float
    lam: float
    phase: float = 0.0

    @property
    def magnitude(self) -> float:
        return 4.0 * math.pi * self.surface_area**2 / self.lam**2

    @property
    def value(self) -> complex:
        return self.magnitude * complex(math.cos(self.phase), math.sin(self.phase))

    def __complex__(self):
        return self.value


def as_complex(tau_s) -> complex:
    return complex(tau_s.value if isinstance(tau_s, TargetRcs) else tau_s)


@dataclass(frozen=True)
class SamplingPlan:
    k_x: int
    k_y: int
    points: tuple[SpatialFrequencyPair, ...]
    mode: str = "uniform-grid"

    @property
    def k(self) -> int:
        return len(self.points)

    @classmethod
    def custom(cls, points: Sequence) -> "SamplingPlan":
        pts = tuple(p if isinstance(p, SpatialFrequencyPair) else SpatialFrequencyPair(*p) for p in points)
        if not pts:
            raise ValueError("a sampling plan needs at least one point")
        return cls(len(pts), 1, pts, mode="custom")

    def as_array(self) -> np.ndarray:
        """Points as a ``(K, 2)`` array of (phi, omega)."""
        return np.array([[p.phi, p.omega] for p in self.points], dtype=float)


@dataclass
class ReflectionVector:
    theta: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=complex)
        if np.any(np.abs(self.theta) > 1 + 1e-9):
            raise ValueError(f"reflection amplitude {np.abs(self.theta).max():.6g} exceeds 1")

    @property
    def amplitudes(self) -> np.ndarray:
        return np.abs(self.theta)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.theta)


def _axis_samples(lo: float, hi: float, count: int, name: str) -> np.ndarray:
    if count < 1:
        raise ValueError(f"{name} must be >= 1, got {count}")
    if count == 1:
        return np.array([0.5 * (lo + hi)])
    if hi <= lo:
        raise ValueError(f"{name}={count} samples requested on a zero-width window axis")
    return lo + np.arange(count) * (hi - lo) / (count - 1)


def sample_window(window: AngularWindow, k_x: int, k_y: int = 1) -> SamplingPlan:
    """Uniform tensor grid of ``k_x * k_y`` deviations, endpoints included.

    A count of one puts the single sample at the window midpoint.
    """
    phis = _axis_samples(window.phi_min, window.phi_max, k_x, "k_x")
    omegas = _axis_samples(window.omega_min, window.omega_max, k_y, "k_y")
    pts = tuple(SpatialFrequencyPair(float(p), float(o)) for p in phis for o in omegas)
    return SamplingPlan(k_x, k_y, pts)


def steering_of_sample(point: SpatialFrequencyPair, geom: ArrayGeometry) -> np.ndarray:
    # deviations may exceed 1 in magnitude; upa_response handles any real input
    return upa_response(point, geom)


def steering_matrix(points, geom: ArrayGeometry) -> np.ndarray:
    """Stack of sample steering vectors, shape ``(K, N)``."""
    pts = np.asarray(points.as_array() if isinstance(points, SamplingPlan) else points, dtype=float)
    pts = pts.reshape(-1, 2)
    ex = ula_steering(geom.d_e * pts[:, 0], geom.n_x)
    ey = ula_steering(geom.d_e * pts[:, 1], geom.n_y)
    return (ex[:, :, None] * ey[:, None, :]).reshape(len(pts), -1)


def _theta_of(theta) -> np.ndarray:
    return np.asarray(theta.theta if isinstance(theta, ReflectionVector) else theta, dtype=complex)


def reflection_gain(theta, point: SpatialFrequencyPair, tau_s, geom: ArrayGeometry) -> complex:
    """Complex reflection gain ``u^T theta + tau_s`` at deviation ``point``."""
    th = _theta_of(theta)
    if th.shape != (geom.n,):
        raise ValueError(f"theta has shape {th.shape}, geometry needs ({geom.n},)")
    u = steering_of_sample(point, geom)
    return complex(u @ th + as_complex(tau_s))


def gain_grid(theta, phis, omegas, tau_s, geom: ArrayGeometry) -> np.ndarray:
    """``|R|^2`` on the tensor grid ``phis x omegas``, shape ``(len(phis), len(omegas))``."""
    th = _theta_of(theta)
    if th.shape != (geom.n,):
        raise ValueError(f"theta has shape {th.shape}, geometry needs ({geom.n},)")
    ex = ula_steering(geom.d_e * np.atleast_1d(phis), geom.n_x)
    ey = ula_steering(geom.d_e * np.atleast_1d(omegas), geom.n_y)
    r = ex @ th.reshape(geom.n_x, geom.n_y) @ ey.T + as_complex(tau_s)
    return np.abs(r) ** 2


def _golden_max(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _axis_grid(lo: float, hi: float, density: float) -> np.ndarray:
    if hi <= lo:
        return np.array([lo])
    count = max(2, int(math.ceil((hi - lo) * density)) + 1)
    return np.linspace(lo, hi, count)


def window_max_gain(theta, window: AngularWindow, tau_s, geom: ArrayGeometry, grid_density: float = 1000.0):
    """Maximum of ``|R|^2`` over the continuous window.

    Dense grid (endpoints included, ``grid_density`` points per unit spatial
    frequency) followed by golden-section polishing around the grid argmax.
    The polished point replaces the grid point only if strictly larger, so
    plateaus keep the lexicographically smallest grid argmax.

    Returns
    -------
    eta : float
    argmax : SpatialFrequencyPair
    """
    if grid_density < 100:
        raise ValueError(f"grid_density must be >= 100, got {grid_density}")
    phis = _axis_grid(window.phi_min, window.phi_max, grid_density)
    omegas = _axis_grid(window.omega_min, window.omega_max, grid_density)
    g = gain_grid(theta, phis, omegas, tau_s, geom)
    # argmax returns the first flat index, i.e. smallest phi then smallest omega
    i, j = np.unravel_index(int(np.argmax(g)), g.shape)
    best = float(g[i, j])
    p, o = float(phis[i]), float(omegas[j])

    def gain_at(pp, oo):
        return float(gain_grid(theta, [pp], [oo], tau_s, geom)[0, 0])

    rp, ro = p, o
    for _ in range(3):
        if len(phis) > 1:
            step = phis[1] - phis[0]
            lo, hi = max(window.phi_min, rp - step), min(window.phi_max, rp + step)
            rp, _v = _golden_max(lambda x: gain_at(x, ro), lo, hi)
        if len(omegas) > 1:
            step = omegas[1] - omegas[0]
            lo, hi = max(window.omega_min, ro - step), min(window.omega_max, ro + step)
            ro, _v = _golden_max(lambda y: gain_at(rp, y), lo, hi)
    refined = gain_at(rp, ro)
    if refined > best:
        best, p, o = refined, rp, ro
    return best, SpatialFrequencyPair(p, o)
