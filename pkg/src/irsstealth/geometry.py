"""Array geometry, steering vectors and region-to-window mapping.

The IRS is a uniform planar array parallel to the x-y plane. Element
``n = m_x * n_y + m_y`` (0-based, x-major) sits at ``(m_x, m_y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise ValueError(f"non-finite coordinate in {self!r}")

    def asarray(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar IRS.

    Parameters
    ----------
    n_x, n_y : int
        Element counts along x and y.
    delta_e : float
        Element spacing in meters, at most half a wavelength.
    lam : float
        Wavelength in meters.
    """

    n_x: int
    n_y: int
    delta_e: float
    lam: float

    def __post_init__(self):
        if int(self.n_x) < 1 or int(self.n_y) < 1:
            raise ValueError(f"element counts must be >= 1, got ({self.n_x}, {self.n_y})")
        if self.lam <= 0:
            raise ValueError(f"wavelength must be positive, got {self.lam}")
        if not 0 < self.delta_e <= self.lam / 2 * (1 + 1e-12):
            raise ValueError(
                f"element spacing must lie in (0, lam/2], got {self.delta_e} for lam={self.lam}"
            )

    @classmethod
    def normalized(cls, n_x: int, n_y: int = 1, d_e: float = 1.0) -> "ArrayGeometry":
        """Geometry with unit wavelength and spacing ``d_e / 2``."""
        return cls(n_x, n_y, d_e / 2.0, 1.0)

    @property
    def n(self) -> int:
        return self.n_x * self.n_y

    @property
    def d_e(self) -> float:
        return min(2.0 * self.delta_e / self.lam, 1.0)


@dataclass(frozen=True)
class SpatialFrequencyPair:
    phi: float
    omega: float

    def __iter__(self):
        yield self.phi
        yield self.omega


@dataclass(frozen=True)
class RegionRect:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z: float = 0.0

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"empty region {self!r}")


@dataclass(frozen=True)
class AngularWindow:
    """Box of spatial-frequency deviations ``[phi_min, phi_max] x [omega_min, omega_max]``."""

    phi_min: float
    phi_max: float
    omega_min: float = 0.0
    omega_max: float = 0.0

    def __post_init__(self):
        if self.phi_min > self.phi_max or self.omega_min > self.omega_max:
            raise ValueError(f"inverted window bounds {self!r}")
        bounds = (self.phi_min, self.phi_max, self.omega_min, self.omega_max)
        if any(abs(b) > 2.0 + 1e-12 for b in bounds):
            raise ValueError(f"window bounds must lie in [-2, 2], got {bounds}")

    @classmethod
    def symmetric(cls, phi_max: float, omega_max: float = 0.0) -> "AngularWindow":
        return cls(-phi_max, phi_max, -omega_max, omega_max)

    @property
    def center(self) -> SpatialFrequencyPair:
        return SpatialFrequencyPair(
            0.5 * (self.phi_min + self.phi_max), 0.5 * (self.omega_min + self.omega_max)
        )

    def contains(self, sf: SpatialFrequencyPair, atol: float = 1e-12) -> bool:
        return (
            self.phi_min - atol <= sf.phi <= self.phi_max + atol
            and self.omega_min - atol <= sf.omega <= self.omega_max + atol
        )

    def contains_window(self, other: "AngularWindow", atol: float = 1e-12) -> bool:
        return (
            self.phi_min - atol <= other.phi_min
            and other.phi_max <= self.phi_max + atol
            and self.omega_min - atol <= other.omega_min
            and other.omega_max <= self.omega_max + atol
        )


def ula_steering(phi, n: int) -> np.ndarray:
    """ULA steering vector ``[1, e^{-i pi phi}, ..., e^{-i pi (n-1) phi}]``.

    ``phi`` may be an array; the element index then runs along the last axis.
    """
    if int(n) < 1:
        raise ValueError(f"array length must be >= 1, got {n}")
    phi = np.asarray(phi, dtype=float)
    m = np.arange(int(n))
    return np.exp(-1j * np.pi * phi[..., None] * m)


def direction_cosines(q: Vec3, w: Vec3) -> SpatialFrequencyPair:
    """Direction cosines along x and y of the line from the IRS at ``q`` to ``w``.

    For an IRS parallel to the x-y plane these equal ``sin(zenith) cos(azimuth)``
    and ``sin(zenith) sin(azimuth)``.
    """
    d = w.asarray() - q.asarray()
    dist = math.hypot(*d)
    if dist == 0.0:
        raise DegenerateGeometryError(f"coincident points {q!r} and {w!r}")
    return SpatialFrequencyPair(d[0] / dist, d[1] / dist)


def upa_response(sf: SpatialFrequencyPair, geom: ArrayGeometry) -> np.ndarray:
    """UPA response ``e(d_e phi, n_x) kron e(d_e omega, n_y)``, length ``N``."""
    ex = ula_steering(geom.d_e * sf.phi, geom.n_x)
    ey = ula_steering(geom.d_e * sf.omega, geom.n_y)
    return np.kron(ex, ey)


def _axis_candidates(lo: float, hi: float, center: float, count: int) -> np.ndarray:
    # the nearest point to the nadir projection is where |cosine| peaks on an edge
    pts = np.linspace(lo, hi, count)
    return np.unique(np.append(pts, np.clip(center, lo, hi)))


def angular_window(region: RegionRect, q: Vec3, grid_per_axis: int = 101) -> AngularWindow:
    """Deviation window equivalent to radars anywhere in ``region``.

    Transmitter and receiver move independently, so each bound is the
    difference of two single-link extremes. Extremes are searched on a
    ``grid_per_axis`` squared grid that always contains the corners; the
    nadir projection of ``q`` is added to each axis since the direction
    cosines peak there along an edge.
    """
    if grid_per_axis < 2:
        raise ValueError(f"grid_per_axis must be >= 2, got {grid_per_axis}")
    height = q.z - region.z
    if not height > 0:
        raise DegenerateGeometryError(
            f"IRS at z={q.z} must lie strictly above the region plane z={region.z}"
        )
    xs = _axis_candidates(region.x_min, region.x_max, q.x, grid_per_axis)
    ys = _axis_candidates(region.y_min, region.y_max, q.y, grid_per_axis)
    dx, dy = np.meshgrid(xs - q.x, ys - q.y, indexing="ij")
    dist = np.sqrt(dx**2 + dy**2 + height**2)
    cx = dx / dist
    cy = dy / dist
    cx_lo, cx_hi = float(cx.min()), float(cx.max())
    cy_lo, cy_hi = float(cy.min()), float(cy.max())
    return AngularWindow(cx_lo - cx_hi, cx_hi - cx_lo, cy_lo - cy_hi, cy_hi - cy_lo)
