"""Bistatic line-of-sight channel model and echo simulation.

Radar arrays are ULAs along x with half-wavelength spacing. Their steering
vectors are normalized to unit norm, so the noiseless echo power divided by
the per-antenna noise variance equals ``G |R|^2 / (M sigma^2)``.

Noise uses a Philox-4x64 counter-based generator (numpy) seeded with the
caller's integer; two uniforms per antenna, drawn in antenna order as
``(u1, u2)`` pairs, are mapped through Box-Muller:
``n_m = sqrt(sigma2 / 2) * sqrt(-2 ln(1 - u1)) * exp(i 2 pi u2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError
from .gain import as_complex, reflection_gain
from .geometry import ArrayGeometry, SpatialFrequencyPair, Vec3, direction_cosines, ula_steering, upa_response

TRANSMIT = "transmit"
RECEIVE = "receive"


@dataclass(frozen=True)
class ChannelParams:
    alpha: float = 1.0
    lam: float = 0.15
    speed: float = 0.0
    sigma2: float = 1.0
    m_antennas: int = 1

    def __post_init__(self):
        if self.alpha <= 0 or self.sigma2 <= 0:
            raise ValueError("alpha and sigma2 must be positive")
        if self.m_antennas < 1:
            raise ValueError(f"m_antennas must be >= 1, got {self.m_antennas}")
        if self.speed < 0:
            raise ValueError(f"speed must be >= 0, got {self.speed}")
        if self.lam <= 0:
            raise ValueError(f"wavelength must be positive, got {self.lam}")


@dataclass
class RadarWaveform:
    x: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=complex)
        if not np.all(np.isfinite(self.x)) or not np.any(self.x):
            raise ValueError("waveform must be finite and not identically zero")

    @classmethod
    def default(cls, m: int) -> "RadarWaveform":
        x = np.zeros(m, dtype=complex)
        x[0] = 1.0
        return cls(x)


@dataclass
class LinkChannel:
    rho: complex
    doppler: float
    array_response_irs: np.ndarray = field(repr=False)
    array_response_radar: np.ndarray = field(repr=False)
    distance: float


@dataclass
class EchoSnapshot:
    y: np.ndarray = field(repr=False)
    snr: float
    g_norm: float
    reflection_gain: complex
    noise_seed: int | None


def _distance(q: Vec3, w: Vec3) -> float:
    d = math.hypot(*(q.asarray() - w.asarray()))
    if d == 0.0:
        raise DegenerateGeometryError(f"coincident points {q!r} and {w!r}")
    return d


def path_gain(q: Vec3, w: Vec3, params: ChannelParams) -> complex:
    """Free-space gain ``sqrt(alpha)/d * exp(-i 2 pi d / lam)``."""
    d = _distance(q, w)
    phase = -2.0 * math.pi * math.fmod(d / params.lam, 1.0)
    return math.sqrt(params.alpha) / d * complex(math.cos(phase), math.sin(phase))


def link_angles(q: Vec3, w: Vec3) -> tuple[float, float]:
    """Zenith and azimuth of ``w`` seen from the downward-facing IRS at ``q``."""
    d = _distance(q, w)
    sf = direction_cosines(q, w)
    cos_zen = (q.z - w.z) / d
    zenith = math.acos(max(-1.0, min(1.0, cos_zen)))
    azimuth = math.atan2(sf.omega, sf.phi)
    return zenith, azimuth


def doppler_frequency(zenith: float, azimuth: float, speed: float, lam: float) -> float:
    return speed * math.cos(zenith) * math.cos(azimuth) / lam


def doppler_shift(q: Vec3, w: Vec3, params: ChannelParams, link: str = TRANSMIT) -> float:
    """Doppler ``v cos(zenith) cos(azimuth) / lam`` of one link.

    Both links use the same expression with their own angles at the IRS
    (arrival for the transmit link, departure for the receive link).
    """
    if link not in (TRANSMIT, RECEIVE):
        raise ValueError(f"link must be {TRANSMIT!r} or {RECEIVE!r}, got {link!r}")
    zenith, azimuth = link_angles(q, w)
    return doppler_frequency(zenith, azimuth, params.speed, params.lam)


def radar_response(q: Vec3, w: Vec3, m: int) -> np.ndarray:
    """Unit-norm response of the radar ULA at ``w`` toward the target at ``q``."""
    d = q.asarray() - w.asarray()
    cos_x = d[0] / _distance(q, w)
    return ula_steering(cos_x, m) / math.sqrt(m)


def link(q: Vec3, w: Vec3, geom: ArrayGeometry, params: ChannelParams, kind: str = TRANSMIT) -> LinkChannel:
    d = _distance(q, w)
    return LinkChannel(
        rho=path_gain(q, w, params),
        doppler=doppler_shift(q, w, params, kind),
        array_response_irs=upa_response(direction_cosines(q, w), geom),
        array_response_radar=radar_response(q, w, params.m_antennas),
        distance=d,
    )


def _rotation(f: float, t: float) -> complex:
    ph = 2.0 * math.pi * math.fmod(f * t, 1.0)
    return complex(math.cos(ph), math.sin(ph))


def build_transmit_channel(q: Vec3, w_t: Vec3, t: float, geom: ArrayGeometry, params: ChannelParams):
    """Radar-transmitter links at time ``t``.

    Returns
    -------
    H_T : ndarray, shape (N, M)
        Transmitter-to-IRS channel ``rho e^{i 2 pi f t} a_R abar_T^H``.
    h_T_conj : ndarray, shape (M,)
        Direct transmitter-to-target row ``rho e^{i 2 pi f t} abar_T^H``.
    """
    lk = link(q, w_t, geom, params, TRANSMIT)
    scale = lk.rho * _rotation(lk.doppler, t)
    row = scale * lk.array_response_radar.conj()
    return np.outer(lk.array_response_irs, row), row


def build_receive_channel(q: Vec3, w_r: Vec3, t: float, geom: ArrayGeometry, params: ChannelParams):
    """IRS-to-receiver ``H_R`` (M, N) and target-to-receiver ``h_R`` (M,)."""
    lk = link(q, w_r, geom, params, RECEIVE)
    h = lk.rho * _rotation(lk.doppler, t) * lk.array_response_radar
    return np.outer(h, lk.array_response_irs.conj()), h


def deviation(q: Vec3, w_t: Vec3, w_r: Vec3) -> SpatialFrequencyPair:
    """Spatial-frequency deviation (arrival minus departure) of a radar pair."""
    a = direction_cosines(q, w_t)
    b = direction_cosines(q, w_r)
    return SpatialFrequencyPair(a.phi - b.phi, a.omega - b.omega)


def _check_theta(theta, geom: ArrayGeometry) -> np.ndarray:
    th = np.asarray(getattr(theta, "theta", theta), dtype=complex)
    if th.shape != (geom.n,):
        raise ValueError(f"theta has shape {th.shape}, geometry needs ({geom.n},)")
    return th


def noiseless_echo(q, w_t, w_r, theta, waveform, t, geom, params, tau_s) -> np.ndarray:
    """Signal part of the received echo, IRS path plus bare-target path."""
    th = _check_theta(theta, geom)
    x = waveform.x if isinstance(waveform, RadarWaveform) else np.asarray(waveform, dtype=complex)
    if x.shape != (params.m_antennas,):
        raise ValueError(f"waveform has shape {x.shape}, expected ({params.m_antennas},)")
    H_T, hT_row = build_transmit_channel(q, w_t, t, geom, params)
    H_R, h_R = build_receive_channel(q, w_r, t, geom, params)
    return H_R @ (th * (H_T @ x)) + as_complex(tau_s) * h_R * (hT_row @ x)


def normalized_power(q, w_t, w_r, waveform, params) -> float:
    """``G = M |rho_R rho_T abar_T^H x|^2``; independent of ``t`` and ``theta``."""
    x = waveform.x if isinstance(waveform, RadarWaveform) else np.asarray(waveform, dtype=complex)
    a_t = radar_response(q, w_t, params.m_antennas)
    val = path_gain(q, w_r, params) * path_gain(q, w_t, params) * np.vdot(a_t, x)
    return params.m_antennas * abs(val) ** 2


def complex_noise(m: int, sigma2: float, seed: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(seed))
    u = gen.random(2 * m).reshape(m, 2)
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    return math.sqrt(sigma2 / 2.0) * r * np.exp(2j * np.pi * u[:, 1])


def receiver_snr(q, w_t, w_r, theta, waveform, t, geom, params, tau_s) -> float:
    """SNR ``G |R|^2 / (M sigma^2)`` through the angular-domain gain."""
    th = _check_theta(theta, geom)
    r = reflection_gain(th, deviation(q, w_t, w_r), tau_s, geom)
    g = normalized_power(q, w_t, w_r, waveform, params)
    return g / (params.m_antennas * params.sigma2) * abs(r) ** 2


def simulate_echo(q, w_t, w_r, theta, waveform, t, geom, params, tau_s, noise_seed: int | None = None) -> EchoSnapshot:
    """One received pulse; ``noise_seed=None`` gives the noiseless echo."""
    th = _check_theta(theta, geom)
    if np.any(np.abs(th) > 1 + 1e-9):
        raise ValueError("reflection amplitudes must not exceed 1")
    y = noiseless_echo(q, w_t, w_r, th, waveform, t, geom, params, tau_s)
    if noise_seed is not None:
        y = y + complex_noise(params.m_antennas, params.sigma2, noise_seed)
    r = reflection_gain(th, deviation(q, w_t, w_r), tau_s, geom)
    g = normalized_power(q, w_t, w_r, waveform, params)
    return EchoSnapshot(
        y=y,
        snr=g / (params.m_antennas * params.sigma2) * abs(r) ** 2,
        g_norm=g,
        reflection_gain=r,
        noise_seed=noise_seed,
    )
