"""Experiment configuration: an INI-style file with fixed sections and keys.

Unknown sections or keys are errors. Every value has a default that
reproduces the reference setup (2 GHz, half-wavelength spacing, a 16-element
ULA, window [-0.25, 0.25], S = 0.1 m^2, 20 samples).
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .geometry import AngularWindow, ArrayGeometry, RegionRect, Vec3
from .gain import TargetRcs

SPEED_OF_LIGHT = 3e8
PHASE_MODES = ("zero", "seeded-uniform")


class ConfigError(ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line

    def as_dict(self) -> dict:
        return {"error": "config", "message": str(self), "field": self.field, "line": self.line}


@dataclass
class ExperimentConfig:
    frequency_hz: float = 2e9
    delta_e: float = 0.075
    n_x: int = 16
    n_y: int = 1
    phi_min: float = -0.25
    phi_max: float = 0.25
    omega_min: float = 0.0
    omega_max: float = 0.0
    surface_area: float = 0.1
    rcs_phase_mode: str = "zero"
    k_x: int = 20
    k_y: int = 1
    tol: float = 1e-7
    grid_density: float = 1000.0
    n_x_values: list = field(default_factory=lambda: [4, 8, 16, 32])
    k_values: list = field(default_factory=lambda: [2, 5, 10, 20, 40])
    sample_cases: list = field(default_factory=lambda: [[16, 0.25], [16, 0.4]])
    phi_span: float = 0.5
    phi_points: int = 1001
    random_trials: int = 100
    region: list = field(default_factory=lambda: [-126.0, 126.0, -126.0, 126.0])
    target: list = field(default_factory=lambda: [0.0, 0.0, 1000.0])
    trials: int = 20
    m_antennas: int = 4
    alpha: float = 1.0
    speed: float = 100.0
    sigma2: float = 1e-13
    time: float = 0.0
    noise: bool = False
    seed: int = 0
    workers: int = 1

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    def geometry(self, n_x: int | None = None) -> ArrayGeometry:
        return ArrayGeometry(self.n_x if n_x is None else n_x, self.n_y, self.delta_e, self.wavelength)

    def window(self) -> AngularWindow:
        return AngularWindow(self.phi_min, self.phi_max, self.omega_min, self.omega_max)

    def rcs(self) -> TargetRcs:
        phase = 0.0
        if self.rcs_phase_mode == "seeded-uniform":
            gen = np.random.Generator(np.random.Philox(self.seed))
            phase = float(gen.uniform(0.0, 2.0 * math.pi))
        return TargetRcs(self.surface_area, self.wavelength, phase)

    def region_rect(self) -> RegionRect:
        return RegionRect(*self.region)

    def target_position(self) -> Vec3:
        return Vec3(*self.target)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> "ExperimentConfig":
        def fail(name, msg):
            raise ConfigError(f"{name}: {msg}", field=_FIELD_KEYS.get(name, name))

        for name in ("n_x", "n_y", "k_x", "k_y", "phi_points", "random_trials", "trials", "m_antennas", "workers"):
            if getattr(self, name) < 1:
                fail(name, f"must be >= 1, got {getattr(self, name)}")
        for name in ("frequency_hz", "delta_e", "surface_area", "tol", "alpha", "sigma2", "phi_span"):
            if not getattr(self, name) > 0:
                fail(name, f"must be positive, got {getattr(self, name)}")
        if self.grid_density < 100:
            fail("grid_density", f"must be >= 100, got {self.grid_density}")
        if self.speed < 0:
            fail("speed", "must be >= 0")
        if self.seed < 0 or self.seed >= 2**64:
            fail("seed", "must be an unsigned 64-bit integer")
        if self.rcs_phase_mode not in PHASE_MODES:
            fail("rcs_phase_mode", f"must be one of {PHASE_MODES}, got {self.rcs_phase_mode!r}")
        if self.delta_e > self.wavelength / 2 * (1 + 1e-12):
            fail("delta_e", f"must not exceed half the wavelength ({self.wavelength / 2})")
        if any(v < 1 for v in self.n_x_values):
            fail("n_x_values", "entries must be >= 1")
        if any(v < 1 for v in self.k_values):
            fail("k_values", "entries must be >= 1")
        if any(len(c) != 2 or c[0] < 1 or not 0 < c[1] <= 2 for c in self.sample_cases):
            fail("sample_cases", "entries must be n_x:phi_max with n_x >= 1 and 0 < phi_max <= 2")
        if len(self.region) != 4 or len(self.target) != 3:
            fail("region", "region needs 4 numbers and target 3")
        try:
            self.window()
        except ValueError as exc:
            fail("phi_min", str(exc))
        try:
            self.region_rect()
        except ValueError as exc:
            fail("region", str(exc))
        return self


# section -> key -> (attribute, parser)
def _int_list(s):
    return [int(v) for v in _split(s)]


def _split(s):
    return [v for v in re.split(r"[,\s]+", s.strip()) if v]


def _float_list(s):
    return [float(v) for v in _split(s)]


def _cases(s):
    out = []
    for item in _split(s):
        n, _, p = item.partition(":")
        out.append([int(n), float(p)])
    return out


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


SCHEMA = {
    "radar": {"frequency_hz": float},
    "irs": {"delta_e": float, "n_x": int, "n_y": int},
    "window": {"phi_min": float, "phi_max": float, "omega_min": float, "omega_max": float},
    "target": {"surface_area": float, "rcs_phase_mode": str},
    "sampling": {"k_x": int, "k_y": int},
    "solver": {"tol": float, "grid_density": float},
    "sweep": {
        "n_x_values": _int_list,
        "k_values": _int_list,
        "sample_cases": _cases,
        "phi_span": float,
        "phi_points": int,
        "random_trials": int,
    },
    "simulate": {
        "region": _float_list,
        "target": _float_list,
        "trials": int,
        "m_antennas": int,
        "alpha": float,
        "speed": float,
        "sigma2": float,
        "time": float,
        "noise": _bool,
    },
    "run": {"seed": int, "workers": int},
}

_FIELD_KEYS = {key: f"{sec}.{key}" for sec, keys in SCHEMA.items() for key in keys}
assert set(_FIELD_KEYS) == {f.name for f in fields(ExperimentConfig)}


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno
            continue
        if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", line):
            return lineno
    return None


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}", line=getattr(exc, "lineno", None)) from exc
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", field=section, line=_line_of(text, section, None))
        for key, raw in parser.items(section):
            name = f"{section}.{key}"
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {name}", field=name, line=_line_of(text, section, key))
            try:
                values[key] = SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"{name}: cannot parse {raw!r} ({exc})", field=name,
                                  line=_line_of(text, section, key)) from exc
    cfg = ExperimentConfig(**values)
    try:
        return cfg.validate()
    except ConfigError as exc:
        if exc.field and "." in exc.field:
            sec, key = exc.field.split(".", 1)
            exc.line = _line_of(text, sec, key)
        raise


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
