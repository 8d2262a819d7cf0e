"""Dense log-det barrier solver for small LMI problems.

Solves::

    maximize    c^T x
    subject to  F0 + sum_i x_i F_i  >= 0     (Hermitian, PSD order)
                A x = b
                x_i >= l_i                   for i in the bounded index set

Complex Hermitian data are embedded once into real symmetric matrices of
twice the size; every iteration then runs in real arithmetic. A phase-one
problem finds a strictly feasible start when none is supplied.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import LmiConvergenceError, LmiInfeasibleError, LmiUnboundedError

log = logging.getLogger(__name__)

# phase one searches a box of this relative half-width around its start
PHASE_ONE_RADIUS = 1e6


def _hermitian_tol(h: np.ndarray) -> float:
    return 1e-12 * max(1.0, float(np.abs(h).max(initial=0.0)))


def is_hermitian(h: np.ndarray) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and bool(np.all(np.abs(h - h.conj().T) <= _hermitian_tol(h)))


def real_embed(h) -> np.ndarray:
    """Map Hermitian ``H = X + iY`` to the symmetric ``[[X, -Y], [Y, X]]``.

    The embedding is linear, preserves the PSD order, and each eigenvalue
    of ``H`` appears twice in it.
    """
    h = np.asarray(h)
    if not is_hermitian(h):
        raise ValueError("real_embed needs a square Hermitian matrix")
    x, y = h.real, h.imag
    return np.block([[x, -y], [y, x]])


def _embed_stack(fs: np.ndarray) -> np.ndarray:
    x, y = fs.real, fs.imag
    top = np.concatenate([x, -y], axis=-1)
    bot = np.concatenate([y, x], axis=-1)
    return np.concatenate([top, bot], axis=-2)


@dataclass
class LmiProblem:
    """LMI program data; see the module docstring for the form.

    ``nonneg`` lists the bounded variable indices and ``lower`` gives their
    bounds (zeros when omitted). ``x0`` is an optional strictly feasible
    start; phase one runs when it is missing or not strictly feasible.
    """

    c: np.ndarray
    f0: np.ndarray
    fs: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    nonneg: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    lower: np.ndarray | None = None
    x0: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        p = self.c.size
        self.f0 = np.asarray(self.f0)
        self.fs = np.asarray(self.fs).reshape(p, *self.f0.shape)
        if not is_hermitian(self.f0) or not all(is_hermitian(f) for f in self.fs):
            raise ValueError("all LMI coefficient matrices must be Hermitian of the same size")
        if self.a_eq is None:
            self.a_eq = np.zeros((0, p))
            self.b_eq = np.zeros(0)
        self.a_eq = np.atleast_2d(np.asarray(self.a_eq, dtype=float))
        self.b_eq = np.asarray(self.b_eq, dtype=float).ravel()
        if self.a_eq.shape[1] != p or self.a_eq.shape[0] != self.b_eq.size:
            raise ValueError(f"equality system shape {self.a_eq.shape} does not match {p} variables")
        self.nonneg = np.asarray(self.nonneg, dtype=int).ravel()
        self.lower = (
            np.zeros(self.nonneg.size) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        )
        if self.lower.size != self.nonneg.size:
            raise ValueError("lower must match nonneg in length")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def dim(self) -> int:
        return self.f0.shape[0]

    def matrix(self, x) -> np.ndarray:
        """Hermitian ``F0 + sum_i x_i F_i``."""
        return self.f0 + np.tensordot(np.asarray(x, dtype=float), self.fs, axes=1)


@dataclass
class LmiSolution:
    x: np.ndarray
    objective: float
    iterations: int
    min_eig: float
    eq_residual: float
    bound_slack: float
    stationarity: float
    gap_bound: float
    phase1_iterations: int = 0


class _Barrier:
    """Real-embedded problem with generic linear inequalities ``G x - h > 0``."""

    def __init__(self, c, e0, es, a_eq, b_eq, g, h):
        self.c, self.e0, self.es = c, e0, es
        self.a_eq, self.b_eq = a_eq, b_eq
        self.g, self.h = g, h
        self.m = e0.shape[0]
        self.degree = self.m + g.shape[0]
        if a_eq.shape[0]:
            _, sv, vt = np.linalg.svd(a_eq)
            rank = int(np.sum(sv > 1e-12 * max(1.0, sv[0])))
            self.null = vt[rank:].T
        else:
            self.null = np.eye(c.size)

    def matrix(self, x):
        return self.e0 + np.tensordot(x, self.es, axes=1)

    def slacks(self, x):
        return self.g @ x - self.h

    def strictly_feasible(self, x) -> bool:
        if np.any(self.slacks(x) <= 0):
            return False
        try:
            np.linalg.cholesky(self.matrix(x))
        except np.linalg.LinAlgError:
            return False
        return True

    def barrier_grad(self, x):
        chol = np.linalg.cholesky(self.matrix(x))
        finv = sla.cho_solve((chol, True), np.eye(self.m))
        return -np.einsum("ij,kji->k", finv, self.es) - (self.g / self.slacks(x)[:, None]).sum(axis=0)

    def newton(self, x, t):
        """Newton direction, decrement and line-search data at ``x``."""
        chol = np.linalg.cholesky(self.matrix(x))
        linv = sla.solve_triangular(chol, np.eye(self.m), lower=True)
        w = linv @ self.es @ linv.T
        wflat = w.reshape(w.shape[0], -1)
        s = self.slacks(x)
        gs = self.g / s[:, None]
        grad = -t * self.c - np.einsum("kii->k", w) - gs.sum(axis=0)
        hess = wflat @ wflat.T + gs.T @ gs
        zt = self.null
        hr = zt.T @ hess @ zt
        gr = zt.T @ grad
        try:
            dy = sla.cho_solve(sla.cho_factor(hr), -gr)
        except np.linalg.LinAlgError:
            dy = np.linalg.lstsq(hr, -gr, rcond=None)[0]
        dx = zt @ dy
        dec2 = float(-grad @ dx)
        # spectrum of the whitened step gives exact barrier values along the ray
        nu = np.linalg.eigvalsh(np.tensordot(dx, w, axes=1))
        rho = (self.g @ dx) / s
        return dx, max(dec2, 0.0), nu, rho, float(np.linalg.norm(gr))

    def line_search(self, t, dx, nu, rho, dec2):
        neg = np.concatenate([nu[nu < 0], rho[rho < 0]])
        s_max = float(np.min(-1.0 / neg)) if neg.size else math.inf
        slope = -dec2
        lin = -t * float(self.c @ dx)

        def delta(step):
            return lin * step - np.sum(np.log1p(step * nu)) - np.sum(np.log1p(step * rho))

        step = min(1.0, 0.99 * s_max)
        for _ in range(60):
            if delta(step) <= 0.25 * step * slope:
                return step
            step *= 0.5
        return step


def _initial_weight(bar: _Barrier, x) -> float:
    # least-squares fit of t c to the barrier gradient on the equality null space
    cz = bar.null.T @ bar.c
    bz = bar.null.T @ bar.barrier_grad(x)
    cc = float(cz @ cz)
    if cc == 0.0:
        return 1.0
    return float(np.clip(abs(cz @ bz) / cc, 1e-3, 1e3))


def _solve_barrier(bar: _Barrier, x, tol, max_iter, stop=None, verbose=False, label=""):
    """Path following from strictly feasible ``x``; returns ``(x, t, iters, stat)``."""
    t = _initial_weight(bar, x)
    mu = 10.0
    iters = 0
    stat = math.inf
    while True:
        inner = 0
        while True:
            dx, dec2, nu, rho, gnorm = bar.newton(x, t)
            stat = gnorm / t
            if dec2 / 2.0 <= 1e-10 or inner >= 80:
                break
            step = bar.line_search(t, dx, nu, rho, dec2)
            x_new = x + step * dx
            if not bar.strictly_feasible(x_new):
                step *= 0.5
                x_new = x + step * dx
                if not bar.strictly_feasible(x_new):
                    break
            x = x_new
            iters += 1
            inner += 1
            if verbose:
                log.info("%s iter %4d  t=%.3e  gap<=%.3e  dec=%.3e  step=%.3f",
                         label, iters, t, bar.degree / t, math.sqrt(dec2), step)
            if stop is not None and stop(x, t, False):
                return x, t, iters, stat
            if iters >= max_iter:
                raise LmiConvergenceError(f"{label} barrier exceeded {max_iter} Newton iterations", best=x)
            if abs(float(bar.c @ x)) > 1e12:
                raise LmiUnboundedError(f"{label} objective appears unbounded")
        if stop is not None and stop(x, t, True):
            return x, t, iters, stat
        if bar.degree / t <= tol:
            return x, t, iters, stat
        # long steps while centering is cheap, shorter ones when it struggles
        if inner <= 4:
            mu = min(mu * 2.0, 100.0)
        elif inner > 15:
            mu = max(mu / 2.0, 4.0)
        t *= mu


def _bound_rows(problem: LmiProblem):
    g = np.zeros((problem.nonneg.size, problem.n_vars))
    g[np.arange(problem.nonneg.size), problem.nonneg] = 1.0
    return g, problem.lower.copy()


def _phase_one(problem: LmiProblem, e0, es, g, h, tol, max_iter, verbose):
    p = problem.n_vars
    a, b = problem.a_eq, problem.b_eq
    if problem.x0 is not None:
        x0 = np.asarray(problem.x0, dtype=float)
        if a.shape[0]:
            x0 = x0 - np.linalg.lstsq(a, a @ x0 - b, rcond=None)[0]
    elif a.shape[0]:
        x0 = np.linalg.lstsq(a, b, rcond=None)[0]
    else:
        x0 = np.zeros(p)
    m = e0.shape[0]
    lam_min = float(np.linalg.eigvalsh(e0 + np.tensordot(x0, es, axes=1))[0])
    slack_min = float(np.min(g @ x0 - h)) if g.shape[0] else math.inf
    s0 = min(lam_min, slack_min) - 1.0
    s_cap = max(1.0, abs(lam_min))
    radius = PHASE_ONE_RADIUS * (1.0 + float(np.max(np.abs(x0), initial=0.0)))
    # variables (x, s): maximize s with F(x) - s I >= 0, bounds - s >= 0, s <= s_cap
    # and |x - x0| <= radius; the cap and the box keep the barrier bounded below
    # even when the feasible set has recession directions
    c1 = np.zeros(p + 1)
    c1[-1] = 1.0
    es1 = np.concatenate([es, -np.eye(m)[None]], axis=0)
    cap_row = np.zeros((1, p + 1))
    cap_row[0, -1] = -1.0
    box = np.hstack([np.vstack([np.eye(p), -np.eye(p)]), np.zeros((2 * p, 1))])
    g1 = np.vstack([np.hstack([g, -np.ones((g.shape[0], 1))]), cap_row, box])
    h1 = np.concatenate([h, [-s_cap], x0 - radius, -x0 - radius])
    a1 = np.hstack([a, np.zeros((a.shape[0], 1))])
    bar = _Barrier(c1, e0, es1, a1, b, g1, h1)

    def stop(z, t, centered):
        if z[-1] >= 0.5 * s_cap:
            return True
        return centered and (z[-1] > 0 or z[-1] + bar.degree / t < 0)

    z, t, iters, _ = _solve_barrier(
        bar, np.append(x0, s0), tol=min(tol, 1e-10), max_iter=max_iter, stop=stop, verbose=verbose, label="phase1"
    )
    if z[-1] > 0:
        return z[:-1], iters
    chol = np.linalg.cholesky(bar.matrix(z))
    cert = sla.cho_solve((chol, True), np.eye(m)) / t
    raise LmiInfeasibleError(
        f"no strictly feasible point within {radius:.3g} of the start: "
        f"best eigenvalue/bound margin {z[-1]:.3e}",
        certificate=cert,
        margin=float(z[-1]),
    )


def solve_lmi(problem: LmiProblem, tol: float = 1e-7, max_iter: int = 2000, verbose: bool = False) -> LmiSolution:
    """Maximize ``c^T x`` over the LMI feasible set.

    Terminates once the barrier duality-gap bound ``degree / t`` falls
    below ``tol``, where ``degree`` is the embedded LMI size plus the
    number of bounds.

    Raises
    ------
    LmiInfeasibleError
        If phase one proves no strictly feasible point exists.
    LmiConvergenceError
        If ``max_iter`` Newton steps are spent; ``best`` holds the iterate.
    """
    e0 = real_embed(problem.f0)
    es = _embed_stack(problem.fs)
    g, h = _bound_rows(problem)
    bar = _Barrier(problem.c, e0, es, problem.a_eq, problem.b_eq, g, h)

    x = None if problem.x0 is None else np.asarray(problem.x0, dtype=float)
    phase1 = 0
    eq_ok = x is not None and (
        problem.a_eq.shape[0] == 0 or np.linalg.norm(problem.a_eq @ x - problem.b_eq) <= 1e-12 * (1 + np.linalg.norm(problem.b_eq))
    )
    if x is None or not eq_ok or not bar.strictly_feasible(x):
        x, phase1 = _phase_one(problem, e0, es, g, h, tol, max_iter, verbose)

    x, t, iters, stat = _solve_barrier(bar, x, tol, max_iter - phase1, verbose=verbose, label="phase2")

    lmi = problem.matrix(x)
    return LmiSolution(
        x=x,
        objective=float(problem.c @ x),
        iterations=iters + phase1,
        min_eig=float(np.linalg.eigvalsh(lmi)[0]),
        eq_residual=float(np.linalg.norm(problem.a_eq @ x - problem.b_eq)) if problem.a_eq.size else 0.0,
        bound_slack=float(np.min(g @ x - h)) if g.shape[0] else math.inf,
        stationarity=stat,
        gap_bound=bar.degree / t,
        phase1_iterations=phase1,
    )
