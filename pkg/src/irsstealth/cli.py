"""Command-line entry point: single solves, the three sweeps and the echo simulator.

All outputs carry the resolved configuration and seed and contain no timing
information, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .channel import ChannelParams, RadarWaveform, deviation, noiseless_echo, simulate_echo
from .config import ConfigError, ExperimentConfig, load_config
from .errors import DegenerateGeometryError, LmiError, SingularDualError
from .gain import as_complex, gain_grid, window_max_gain
from .geometry import AngularWindow, Vec3, angular_window
from .optimizer import (
    StealthInstance,
    baseline_no_irs,
    baseline_random_phase,
    baseline_single_point,
    solve_stealth,
)

METHODS = ("proposed", "no_irs", "single_point", "random_phase")
# odd offset keeps per-trial seeds distinct from the run seed itself
_TRIAL_STRIDE = 0x9E3779B97F4A7C15


def to_db(linear: float):
    """``10 log10`` of a power ratio, or the string ``"-inf"`` when not positive."""
    return 10.0 * math.log10(linear) if linear > 0 else "-inf"


def from_db(db) -> float:
    return 0.0 if db == "-inf" else 10.0 ** (db / 10.0)


def trial_seed(seed: int, index: int) -> int:
    return (seed + (index + 1) * _TRIAL_STRIDE) % 2**64


def _instance(cfg: ExperimentConfig, n_x: int | None = None, window: AngularWindow | None = None,
              k_x: int | None = None) -> StealthInstance:
    return StealthInstance.from_window(
        cfg.geometry(n_x), cfg.rcs(), window or cfg.window(), cfg.k_x if k_x is None else k_x, cfg.k_y
    )


def _map(fn, items, workers: int):
    """Ordered map; a bounded process pool when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _header(cfg: ExperimentConfig, command: str, extra=None) -> str:
    lines = [f"# command: {command}", f"# seed: {cfg.seed}",
             f"# config: {json.dumps(cfg.to_dict(), sort_keys=True)}"]
    lines += [f"# {k}: {v!r}" for k, v in (extra or {}).items()]
    return "\n".join(lines) + "\n"


def _csv(cfg: ExperimentConfig, command: str, columns, rows, extra=None) -> str:
    buf = io.StringIO()
    buf.write(_header(cfg, command, extra))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _window_list(w: AngularWindow):
    return [w.phi_min, w.phi_max, w.omega_min, w.omega_max]


def cmd_solve(cfg: ExperimentConfig) -> str:
    inst = _instance(cfg)
    sol = solve_stealth(inst, tol=cfg.tol)
    cont, arg = window_max_gain(sol.theta_star, inst.window, inst.tau_s, inst.geom, cfg.grid_density)
    tau = as_complex(inst.tau_s)
    report = {
        "command": "solve",
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "tau_s": [tau.real, tau.imag],
        "k": inst.k,
        "n": inst.n,
        "eta_star": sol.eta_star,
        "eta_star_db": to_db(sol.eta_star),
        "dual_objective": sol.dual_objective,
        "duality_gap": sol.duality_gap,
        "kkt_residual": sol.kkt_residual,
        "effective_samples": [int(k) for k in sol.effective_samples],
        "samples": [[p.phi, p.omega] for p in inst.plan.points],
        "sample_gains": [float(g) for g in sol.sample_gains],
        "window_max_gain": cont,
        "window_argmax": [arg.phi, arg.omega],
        "unit_amplitude_fraction": sol.unit_amplitude_fraction,
        "amplitude_excess": sol.amplitude_excess,
        "theta_star": [[float(abs(t)), float(np.angle(t))] for t in sol.theta_star],
        "duals": {"lambda": [float(v) for v in sol.duals.lam], "mu": [float(v) for v in sol.duals.mu]},
        "iterations": sol.solve_stats.get("iterations"),
    }
    return json.dumps(report, indent=2) + "\n"


def cmd_sweep_gain(cfg: ExperimentConfig) -> str:
    if cfg.n_y != 1:
        raise ConfigError("sweep-gain needs a ULA (n_y = 1)", field="irs.n_y")
    inst = _instance(cfg)
    sol = solve_stealth(inst, tol=cfg.tol)
    thetas = {
        "proposed": sol.theta_star,
        "no_irs": baseline_no_irs(inst),
        "single_point": baseline_single_point(inst),
        "random_phase": baseline_random_phase(inst, cfg.seed),
    }
    phis = np.linspace(-cfg.phi_span, cfg.phi_span, cfg.phi_points)
    gains = {m: gain_grid(th, phis, [0.0], inst.tau_s, inst.geom)[:, 0] for m, th in thetas.items()}
    columns = ["phi", "in_window"]
    for m in METHODS:
        columns += [f"{m}_linear", f"{m}_db"]
    rows = []
    for i, phi in enumerate(phis):
        row = [float(phi), int(inst.window.phi_min <= phi <= inst.window.phi_max)]
        for m in METHODS:
            g = float(gains[m][i])
            row += [g, to_db(g)]
        rows.append(row)
    extra = {"eta_star": sol.eta_star, "duality_gap": sol.duality_gap}
    return _csv(cfg, "sweep-gain", columns, rows, extra)


def _elements_point(args):
    cfg, n_x = args
    inst = _instance(cfg, n_x=n_x)
    sol = solve_stealth(inst, tol=cfg.tol)
    w, tau, geom, dens = inst.window, inst.tau_s, inst.geom, cfg.grid_density
    rows = []
    for m in METHODS:
        gap = ""
        if m == "proposed":
            th = sol.theta_star
            gap = sol.duality_gap
        elif m == "no_irs":
            th = baseline_no_irs(inst)
        elif m == "single_point":
            th = baseline_single_point(inst)
        if m == "random_phase":
            # expectation over independent random configurations
            vals = [
                window_max_gain(baseline_random_phase(inst, trial_seed(cfg.seed, i)), w, tau, geom, dens)[0]
                for i in range(cfg.random_trials)
            ]
            value = float(np.mean(vals))
            eta = ""
        else:
            value = window_max_gain(th, w, tau, geom, dens)[0]
            eta = float(np.max(inst.sample_gains(th)))
        rows.append([n_x, m, value, to_db(value), sol.eta_star if m == "proposed" else eta, gap])
    return rows


def cmd_sweep_elements(cfg: ExperimentConfig) -> str:
    results = _map(_elements_point, [(cfg, n) for n in cfg.n_x_values], cfg.workers)
    rows = [r for block in results for r in block]
    columns = ["n_x", "method", "max_gain_linear", "max_gain_db", "eta_star", "duality_gap"]
    return _csv(cfg, "sweep-elements", columns, rows)


def _samples_point(args):
    cfg, k, n_x, phi_max = args
    window = AngularWindow(-phi_max, phi_max, cfg.omega_min, cfg.omega_max)
    inst = _instance(cfg, n_x=n_x, window=window, k_x=k)
    sol = solve_stealth(inst, tol=cfg.tol)
    value = window_max_gain(sol.theta_star, window, inst.tau_s, inst.geom, cfg.grid_density)[0]
    return [k, n_x, phi_max, value, to_db(value), sol.eta_star, sol.duality_gap]


def cmd_sweep_samples(cfg: ExperimentConfig) -> str:
    tasks = [(cfg, k, int(n), float(p)) for n, p in cfg.sample_cases for k in cfg.k_values]
    rows = _map(_samples_point, tasks, cfg.workers)
    columns = ["k", "n_x", "phi_max", "max_gain_linear", "max_gain_db", "eta_star", "duality_gap"]
    return _csv(cfg, "sweep-samples", columns, rows)


def cmd_simulate(cfg: ExperimentConfig) -> str:
    region = cfg.region_rect()
    q = cfg.target_position()
    window = angular_window(region, q)
    k_y = cfg.k_y if window.omega_max > window.omega_min else 1
    geom = cfg.geometry()
    tau = cfg.rcs()
    inst = StealthInstance.from_window(geom, tau, window, cfg.k_x, k_y)
    sol = solve_stealth(inst, tol=cfg.tol)
    params = ChannelParams(cfg.alpha, cfg.wavelength, cfg.speed, cfg.sigma2, cfg.m_antennas)
    wave = RadarWaveform.default(cfg.m_antennas)
    zero = np.zeros(geom.n, dtype=complex)
    gen = np.random.Generator(np.random.Philox(cfg.seed))
    trials = []
    for i in range(cfg.trials):
        xy = gen.uniform(size=4)
        w_t = Vec3(region.x_min + xy[0] * (region.x_max - region.x_min),
                   region.y_min + xy[1] * (region.y_max - region.y_min), region.z)
        w_r = Vec3(region.x_min + xy[2] * (region.x_max - region.x_min),
                   region.y_min + xy[3] * (region.y_max - region.y_min), region.z)
        noise_seed = trial_seed(cfg.seed, i) if cfg.noise else None
        with_irs = simulate_echo(q, w_t, w_r, sol.theta_star, wave, cfg.time, geom, params, tau, noise_seed)
        without = simulate_echo(q, w_t, w_r, zero, wave, cfg.time, geom, params, tau, noise_seed)
        y0 = noiseless_echo(q, w_t, w_r, sol.theta_star, wave, cfg.time, geom, params, tau)
        measured = float(np.vdot(y0, y0).real) / cfg.sigma2
        dev = deviation(q, w_t, w_r)
        trial = {
            "w_t": [w_t.x, w_t.y, w_t.z],
            "w_r": [w_r.x, w_r.y, w_r.z],
            "deviation": [dev.phi, dev.omega],
            "inside_window": bool(window.contains(dev, atol=1e-12)),
            "snr_irs": with_irs.snr,
            "snr_no_irs": without.snr,
            "snr_ratio": with_irs.snr / without.snr,
            "gain_ratio": abs(with_irs.reflection_gain) ** 2 / abs(without.reflection_gain) ** 2,
            "factorization_rel_err": abs(measured - with_irs.snr) / with_irs.snr,
        }
        if cfg.noise:
            trial["received_power_irs"] = float(np.vdot(with_irs.y, with_irs.y).real)
        trials.append(trial)
    ratios = np.array([t["snr_ratio"] for t in trials])
    report = {
        "command": "simulate",
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "window": _window_list(window),
        "eta_star": sol.eta_star,
        "duality_gap": sol.duality_gap,
        "summary": {
            "snr_ratio_min": float(ratios.min()),
            "snr_ratio_median": float(np.median(ratios)),
            "snr_ratio_max": float(ratios.max()),
            "all_inside_window": all(t["inside_window"] for t in trials),
            "max_factorization_rel_err": max(t["factorization_rel_err"] for t in trials),
        },
        "trials": trials,
    }
    return json.dumps(report, indent=2) + "\n"


COMMANDS = {
    "solve": cmd_solve,
    "sweep-gain": cmd_sweep_gain,
    "sweep-elements": cmd_sweep_elements,
    "sweep-samples": cmd_sweep_samples,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irsstealth", description="IRS echo-suppression solver and experiment harness")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="INI experiment file (defaults used when omitted)")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed, overrides [run] seed")
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.add_argument("--tol", type=float, help="solver tolerance, overrides [solver] tol")
    p.add_argument("--workers", type=int, help="worker processes for sweeps")
    p.add_argument("--verbose", action="store_true")
    return p


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {k: getattr(args, k) for k in ("seed", "tol", "workers") if getattr(args, k) is not None}
    return dataclasses.replace(cfg, **overrides).validate() if overrides else cfg.validate()


def _fail(payload: dict, code: int) -> int:
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        return _fail(exc.as_dict(), 2)
    except OSError as exc:
        return _fail({"error": "config", "message": str(exc), "field": "--config", "line": None}, 2)
    try:
        text = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        return _fail(exc.as_dict(), 2)
    except (LmiError, SingularDualError, DegenerateGeometryError, ValueError) as exc:
        return _fail({"error": type(exc).__name__, "message": str(exc), "command": args.command}, 1)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
