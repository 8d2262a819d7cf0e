"""Min-max reflection design over sampled deviations via the Lagrange dual.

The sampled problem is::

    minimize    eta
    subject to  |u_k^T theta + tau_s|^2 <= eta,   k = 1..K
                |theta_n| <= 1,                  n = 1..N

Because the gain is linear in ``theta`` through ``u_k^T``, the quadratic
form is built from ``a_k = conj(u_k)``: ``Q = sum_k lam_k a_k a_k^H +
diag(mu)`` and ``v = sum_k lam_k a_k``. The dual is maximized as an LMI
(Schur complement of ``Q``) and the primal point is recovered in closed
form from the optimal multipliers.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from .errors import SingularDualError
from .gain import SamplingPlan, as_complex, sample_window, steering_matrix
from .geometry import AngularWindow, ArrayGeometry
from .lmi import LmiProblem, LmiSolution, solve_lmi

log = logging.getLogger(__name__)

LAMBDA_THRESHOLD = 1e-5


@dataclass
class StealthInstance:
    """Sampled min-max problem.

    ``u`` stacks the sample steering vectors as rows, shape ``(K, N)``.
    Geometry, window and plan are kept for reporting and may be ``None``
    for instances built directly from vectors.
    """

    u: np.ndarray = field(repr=False)
    tau_s: complex
    geom: ArrayGeometry | None = None
    window: AngularWindow | None = None
    plan: SamplingPlan | None = None

    def __post_init__(self):
        self.u = np.atleast_2d(np.asarray(self.u, dtype=complex))
        self.tau_s = as_complex(self.tau_s)
        if self.u.shape[0] < 1 or self.u.shape[1] < 1:
            raise ValueError(f"need K >= 1 and N >= 1, got u of shape {self.u.shape}")
        if self.geom is not None and self.u.shape[1] != self.geom.n:
            raise ValueError(f"u has {self.u.shape[1]} columns, geometry has {self.geom.n} elements")
        if self.plan is not None and self.plan.k != self.u.shape[0]:
            raise ValueError("sampling plan and steering vectors disagree on K")

    @classmethod
    def from_window(cls, geom: ArrayGeometry, tau_s, window: AngularWindow, k_x: int, k_y: int = 1):
        return cls.from_plan(geom, tau_s, window, sample_window(window, k_x, k_y))

    @classmethod
    def from_plan(cls, geom: ArrayGeometry, tau_s, window: AngularWindow, plan: SamplingPlan):
        outside = [p for p in plan.points if not window.contains(p)]
        if outside:
            raise ValueError(f"{len(outside)} sampling points fall outside the window, e.g. {outside[0]}")
        return cls(steering_matrix(plan, geom), tau_s, geom, window, plan)

    @property
    def k(self) -> int:
        return self.u.shape[0]

    @property
    def n(self) -> int:
        return self.u.shape[1]

    def sample_gains(self, theta) -> np.ndarray:
        """``|u_k^T theta + tau_s|^2`` for every sample."""
        th = np.asarray(getattr(theta, "theta", theta), dtype=complex)
        return np.abs(self.u @ th + self.tau_s) ** 2


@dataclass
class DualVariables:
    lam: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float).ravel()
        self.mu = np.asarray(self.mu, dtype=float).ravel()

    def check(self, atol: float = 1e-9) -> None:
        if np.any(self.lam < -atol) or np.any(self.mu < -atol):
            raise ValueError("dual variables must be nonnegative")
        if abs(self.lam.sum() - 1.0) > atol:
            raise ValueError(f"lambda must sum to one, sums to {self.lam.sum():.12g}")


@dataclass
class StealthSolution:
    theta_star: np.ndarray = field(repr=False)
    eta_star: float
    duals: DualVariables = field(repr=False)
    dual_objective: float
    duality_gap: float
    kkt_residual: float
    effective_samples: np.ndarray
    sample_gains: np.ndarray = field(repr=False)
    unit_amplitude_fraction: float = 0.0
    amplitude_excess: float = 0.0
    solve_stats: dict = field(default_factory=dict)


def _dual_matrix(duals: DualVariables, instance: StealthInstance):
    lam = duals.lam
    if lam.size != instance.k or duals.mu.size != instance.n:
        raise ValueError(
            f"duals have sizes ({lam.size}, {duals.mu.size}), instance needs ({instance.k}, {instance.n})"
        )
    u = instance.u
    q = (u.conj().T * lam) @ u + np.diag(duals.mu)
    q = 0.5 * (q + q.conj().T)
    v = u.conj().T @ lam
    return q, v


def _cho(q: np.ndarray):
    try:
        return sla.cho_factor(q, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularDualError(
            "dual matrix Q is singular; keep every mu_n above a positive floor"
        ) from exc


def assemble_dual(duals: DualVariables, instance: StealthInstance):
    """Dual matrix ``Q``, weighted steering ``v`` and dual value ``f``.

    ``f = |tau|^2 - |tau|^2 v^H Q^{-1} v - sum(mu)``.
    """
    q, v = _dual_matrix(duals, instance)
    fac = _cho(q)
    t2 = abs(instance.tau_s) ** 2
    quad = float(np.real(np.vdot(v, sla.cho_solve(fac, v))))
    f = t2 - t2 * quad - float(duals.mu.sum())
    return q, v, f


def stationary_theta(duals: DualVariables, instance: StealthInstance) -> np.ndarray:
    """Minimizer ``-tau Q^{-1} v`` of the Lagrangian over ``theta``."""
    q, v = _dual_matrix(duals, instance)
    return -instance.tau_s * sla.cho_solve(_cho(q), v)


def dual_value(duals: DualVariables, instance: StealthInstance) -> float:
    return assemble_dual(duals, instance)[2]


def default_mu_floor(tau_s) -> float:
    return 1e-10 * (1.0 + abs(as_complex(tau_s)) ** 2)


def bootstrap_point(instance: StealthInstance, mu_floor: float) -> np.ndarray:
    """Strictly feasible ``(q, lam, mu)`` for the dual LMI.

    With ``mu = mu0 I`` we have ``Q >= mu0 I`` and ``v^H Q^{-1} v <= N / mu0``,
    so any ``q`` below ``|tau|^2 - N mu0 - |tau|^2 N / mu0`` works.
    """
    k, n = instance.k, instance.n
    t2 = abs(instance.tau_s) ** 2
    mu0 = 2.0 * max(math.sqrt(t2 * n), 1.0) + mu_floor
    q0 = t2 - n * mu0 - t2 * n / mu0 - 1.0
    return np.concatenate([[q0], np.full(k, 1.0 / k), np.full(n, mu0)])


def build_p4(instance: StealthInstance, mu_floor: float | None = None) -> LmiProblem:
    """Dual problem as an LMI in ``(q, lam_1..lam_K, mu_1..mu_N)``.

    The Hermitian block is ``[[|tau|^2 - sum(mu) - q, conj(tau) v^H], [tau v, Q]]``
    of size ``N + 1``; ``sum(lam) = 1``, ``lam >= 0``, ``mu >= mu_floor``.
    """
    if mu_floor is None:
        mu_floor = default_mu_floor(instance.tau_s)
    k, n = instance.k, instance.n
    tau = instance.tau_s
    dim = n + 1
    p = 1 + k + n
    f0 = np.zeros((dim, dim), dtype=complex)
    f0[0, 0] = abs(tau) ** 2
    fs = np.zeros((p, dim, dim), dtype=complex)
    fs[0, 0, 0] = -1.0
    a = instance.u.conj()
    for i in range(k):
        blk = fs[1 + i]
        blk[1:, 0] = tau * a[i]
        blk[0, 1:] = np.conj(tau) * a[i].conj()
        blk[1:, 1:] = np.outer(a[i], a[i].conj())
    for j in range(n):
        fs[1 + k + j, 0, 0] = -1.0
        fs[1 + k + j, 1 + j, 1 + j] = 1.0
    c = np.zeros(p)
    c[0] = 1.0
    a_eq = np.zeros((1, p))
    a_eq[0, 1 : 1 + k] = 1.0
    nonneg = np.arange(1, p)
    lower = np.concatenate([np.zeros(k), np.full(n, mu_floor)])
    return LmiProblem(
        c=c, f0=f0, fs=fs, a_eq=a_eq, b_eq=[1.0], nonneg=nonneg, lower=lower,
        x0=bootstrap_point(instance, mu_floor),
    )


def _finish(instance: StealthInstance, duals: DualVariables, stats: dict) -> StealthSolution:
    _, _, f = assemble_dual(duals, instance)
    theta = stationary_theta(duals, instance)
    amp = np.abs(theta)
    excess = float(max(amp.max() - 1.0, 0.0))
    if excess > 0:
        theta = np.where(amp > 1.0, theta / np.maximum(amp, 1.0), theta)
    gains = instance.sample_gains(theta)
    eta = float(gains.max())
    lam = duals.lam
    kkt = float(np.max(lam * np.abs(eta - gains)))
    effective = np.flatnonzero(lam > LAMBDA_THRESHOLD * lam.max())
    unit_frac = float(np.mean(np.abs(theta) > 0.99))
    log.info("solved K=%d N=%d: eta=%.6g gap=%.3g |K_eff|=%d unit-amplitude fraction=%.2f",
             instance.k, instance.n, eta, eta - f, effective.size, unit_frac)
    return StealthSolution(
        theta_star=theta,
        eta_star=eta,
        duals=duals,
        dual_objective=f,
        duality_gap=eta - f,
        kkt_residual=kkt,
        effective_samples=effective,
        sample_gains=gains,
        unit_amplitude_fraction=unit_frac,
        amplitude_excess=excess,
        solve_stats=stats,
    )


def solve_stealth(
    instance: StealthInstance, tol: float = 1e-7, mu_floor: float | None = None, verbose: bool = False
) -> StealthSolution:
    """Optimal reflection vector for the sampled min-max problem.

    Solves the dual LMI, recovers ``theta`` from the optimal multipliers and
    recomputes ``eta`` as the exact maximum sampled gain at that ``theta``.
    """
    if mu_floor is None:
        mu_floor = default_mu_floor(instance.tau_s)
    k, n = instance.k, instance.n
    start = time.perf_counter()
    sol: LmiSolution = solve_lmi(build_p4(instance, mu_floor), tol=tol, verbose=verbose)
    duals = DualVariables(np.maximum(sol.x[1 : 1 + k], 0.0), sol.x[1 + k :])
    stats = {
        "iterations": sol.iterations,
        "lmi_objective": sol.objective,
        "lmi_gap_bound": sol.gap_bound,
        "lmi_min_eig": sol.min_eig,
        "mu_floor": mu_floor,
        "seconds": time.perf_counter() - start,
    }
    return _finish(instance, duals, stats)


def _project_disk(theta: np.ndarray) -> np.ndarray:
    amp = np.abs(theta)
    return np.where(amp > 1.0, theta / np.maximum(amp, 1.0), theta)


def _subgradient(u, tau, theta, iterations, step_schedule, step_scale, epoch):
    r = u @ theta + tau
    g = np.abs(r) ** 2
    k = int(np.argmax(g))
    best_theta, best = theta.copy(), float(g[k])
    step = step_scale
    for it in range(1, iterations + 1):
        grad = r[k] * u[k].conj()
        if step_schedule == "sqrt":
            theta = _project_disk(theta - (2.0 * step_scale / math.sqrt(it)) * grad)
        else:
            gnorm = float(np.linalg.norm(grad))
            if gnorm == 0.0:
                break
            theta = _project_disk(theta - (step / gnorm) * grad)
        r = u @ theta + tau
        g = np.abs(r) ** 2
        k = int(np.argmax(g))
        if g[k] < best:
            best, best_theta = float(g[k]), theta.copy()
        if step_schedule == "restart" and it % epoch == 0:
            step *= 0.7
            theta = best_theta.copy()
            r = u @ theta + tau
            g = np.abs(r) ** 2
            k = int(np.argmax(g))
    return best_theta, best


def _slsqp_polish(u, tau, theta0, max_iter=500):
    """Epigraph form ``min eta`` over ``(eta, Re theta, Im theta)`` by SLSQP."""
    k, n = u.shape

    def split(z):
        return z[1 : 1 + n] + 1j * z[1 + n :]

    def cons(z):
        th = split(z)
        return np.concatenate([z[0] - np.abs(u @ th + tau) ** 2, 1.0 - np.abs(th) ** 2])

    def cons_jac(z):
        th = split(z)
        rc = (u @ th + tau).conj()[:, None]
        jac = np.zeros((k + n, 1 + 2 * n))
        jac[:k, 0] = 1.0
        jac[:k, 1 : 1 + n] = -2.0 * np.real(rc * u)
        jac[:k, 1 + n :] = -2.0 * np.real(rc * 1j * u)
        idx = np.arange(n)
        jac[k + idx, 1 + idx] = -2.0 * th.real
        jac[k + idx, 1 + n + idx] = -2.0 * th.imag
        return jac

    grad_obj = np.zeros(1 + 2 * n)
    grad_obj[0] = 1.0
    z0 = np.concatenate([[np.max(np.abs(u @ theta0 + tau) ** 2)], theta0.real, theta0.imag])
    res = minimize(
        lambda z: z[0], z0, jac=lambda z: grad_obj, method="SLSQP",
        constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
        options={"maxiter": max_iter, "ftol": 1e-14},
    )
    theta = _project_disk(split(res.x))
    return theta, float(np.max(np.abs(u @ theta + tau) ** 2))


def primal_oracle(
    instance: StealthInstance,
    iterations: int = 5000,
    step_schedule: str = "sqrt",
    step_scale: float | None = None,
    theta0=None,
    polish: bool = True,
    epoch: int = 1000,
):
    """Primal solver for the sampled problem, independent of the dual route.

    Runs projected subgradient descent on ``max_k |u_k^T theta + tau|^2``:
    each step follows the gradient of the largest sampled term (lowest index
    on ties) and projects every element onto the unit disk. Schedules:

    ``"sqrt"``
        step ``c / sqrt(t)`` on the raw gradient, ``c = 0.1 (1 + |tau|) / N``
        unless ``step_scale`` is given.
    ``"restart"``
        normalized steps of length ``step_scale`` (default 0.3), shrunk by
        0.7 and restarted from the best iterate every ``epoch`` steps.

    Single-term subgradient steps zigzag between near-active samples, so
    with ``polish=True`` the best iterate seeds an SLSQP solve of the
    smooth epigraph form; its result is kept only if it is better.

    Returns
    -------
    theta : ndarray
        Best feasible point found.
    eta : float
        Its exact maximum sampled gain; never above the starting value.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if step_schedule not in ("sqrt", "restart"):
        raise ValueError(f"unknown step schedule {step_schedule!r}")
    u, tau, n = instance.u, instance.tau_s, instance.n
    if step_scale is None:
        step_scale = 0.1 * (1.0 + abs(tau)) / n if step_schedule == "sqrt" else 0.3
    theta = np.zeros(n, dtype=complex) if theta0 is None else _project_disk(np.asarray(theta0, dtype=complex))
    best_theta, best = _subgradient(u, tau, theta, iterations, step_schedule, step_scale, epoch)
    if polish:
        cand, val = _slsqp_polish(u, tau, best_theta)
        if val < best:
            best_theta, best = cand, val
    return best_theta, best


def baseline_no_irs(instance: StealthInstance) -> np.ndarray:
    return np.zeros(instance.n, dtype=complex)


def baseline_single_point(instance: StealthInstance) -> np.ndarray:
    """Reverse alignment at zero deviation, where the steering vector is all ones.

    ``theta_n = beta exp(i (pi + arg tau))`` with ``beta = min(1, |tau| / N)``
    cancels the bare-target echo at the window centre whenever ``N >= |tau|``.
    """
    n = instance.n
    tau = instance.tau_s
    beta = min(1.0, abs(tau) / n)
    # steering phase at zero deviation is 0 for every element
    return np.full(n, beta * np.exp(1j * (math.pi + np.angle(tau))))


def baseline_random_phase(instance: StealthInstance, seed: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(seed))
    return np.exp(1j * gen.uniform(0.0, 2.0 * math.pi, instance.n))
