import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irsstealth.errors import LmiConvergenceError, LmiInfeasibleError
from irsstealth.lmi import LmiProblem, real_embed, solve_lmi


def _max_q(h):
    """Problem ``max q s.t. H - q I >= 0``; the optimum is the smallest eigenvalue."""
    h = np.asarray(h)
    n = h.shape[0]
    return LmiProblem(c=[1.0], f0=h, fs=-np.eye(n)[None])


def test_embed_scalar():
    np.testing.assert_array_equal(real_embed([[2.0]]), [[2, 0], [0, 2]])


def test_embed_eigenvalues_doubled():
    e = real_embed(np.array([[0, 1j], [-1j, 0]]))
    assert e.shape == (4, 4)
    np.testing.assert_allclose(np.linalg.eigvalsh(e), [-1, -1, 1, 1], atol=1e-14)
    rng = np.random.default_rng(0)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    h = a + a.conj().T
    ev = np.linalg.eigvalsh(h)
    np.testing.assert_allclose(np.linalg.eigvalsh(real_embed(h)), np.sort(np.repeat(ev, 2)), atol=1e-12)


def test_embed_linear_and_symmetric():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h1, h2 = a + a.conj().T, b + b.conj().T
    np.testing.assert_allclose(real_embed(h1 + h2), real_embed(h1) + real_embed(h2), atol=1e-14)
    e = real_embed(h1)
    np.testing.assert_array_equal(e, e.T)


def test_embed_rejects_non_hermitian():
    with pytest.raises(ValueError):
        real_embed([[0, 1j], [1j, 0]])
    with pytest.raises(ValueError):
        real_embed(np.ones((2, 3)))


def test_scalar_bound():
    sol = solve_lmi(_max_q([[1.0]]))
    assert sol.objective == pytest.approx(1.0, abs=1e-6)
    assert sol.min_eig >= -1e-8


def test_diagonal_min_eigenvalue():
    assert solve_lmi(_max_q(np.diag([3.0, 5.0]))).objective == pytest.approx(3.0, abs=1e-6)


def test_two_by_two_closed_form():
    a, b, c = 1.0, 1.5, -0.5
    expect = 0.5 * (a + c) - np.hypot(0.5 * (a - c), b)
    sol = solve_lmi(_max_q([[a, b], [b, c]]), tol=1e-10)
    assert sol.objective == pytest.approx(expect, abs=1e-9)
    assert sol.objective == pytest.approx(np.linalg.eigvalsh([[a, b], [b, c]])[0], abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_two_by_two_random(a, b, c):
    expect = 0.5 * (a + c) - np.hypot(0.5 * (a - c), b)
    sol = solve_lmi(_max_q([[a, b], [b, c]]), tol=1e-9)
    assert sol.objective == pytest.approx(expect, abs=1e-7)


def test_complex_min_eigenvalue():
    rng = np.random.default_rng(4)
    for n in (2, 4, 7):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = (a + a.conj().T) / 2
        sol = solve_lmi(_max_q(h), tol=1e-9)
        assert sol.objective == pytest.approx(np.linalg.eigvalsh(h)[0], abs=1e-7)


def _vertex_lp(c, d0, d):
    """Brute-force ``max c^T x s.t. d0 + d x >= 0`` over all vertices."""
    m, p = d.shape
    best = -np.inf
    for rows in itertools.combinations(range(m), p):
        a = d[list(rows)]
        if abs(np.linalg.det(a)) < 1e-12:
            continue
        x = np.linalg.solve(a, -d0[list(rows)])
        if np.all(d0 + d @ x >= -1e-9):
            best = max(best, c @ x)
    return best


def test_diagonal_lmis_match_vertex_enumeration():
    rng = np.random.default_rng(5)
    for _ in range(15):
        p = int(rng.integers(1, 4))
        m_extra = int(rng.integers(1, 5))
        # box rows keep the LP bounded; random rows through a point near the origin keep it feasible
        d = np.vstack([np.eye(p), -np.eye(p), rng.normal(size=(m_extra, p))])
        d0 = np.concatenate([np.full(2 * p, 3.0), rng.uniform(0.5, 2.0, m_extra)])
        c = rng.normal(size=p)
        fs = np.stack([np.diag(d[:, i]) for i in range(p)])
        sol = solve_lmi(LmiProblem(c=c, f0=np.diag(d0), fs=fs), tol=1e-9)
        assert sol.objective == pytest.approx(_vertex_lp(c, d0, d), abs=1e-6)


def test_equality_constraint():
    # minimize t with [[t, x], [x, 1]] >= 0 and x = 0.5, so t = x^2
    fs = np.array([[[1.0, 0], [0, 0]], [[0, 1.0], [1.0, 0]]])
    f0 = np.array([[0.0, 0], [0, 1.0]])
    prob = LmiProblem(c=[-1.0, 0.0], f0=f0, fs=fs, a_eq=[[0, 1]], b_eq=[0.5])
    sol = solve_lmi(prob, tol=1e-10)
    assert sol.x[1] == pytest.approx(0.5, abs=1e-12)
    assert sol.x[0] == pytest.approx(0.25, abs=1e-8)
    assert sol.eq_residual <= 1e-8


def test_solution_checked_independently():
    rng = np.random.default_rng(6)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = a @ a.conj().T + np.eye(4)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    g = g + g.conj().T
    # max x1 + x2 with H - x1 I - x2 G >= 0, x2 >= 0, x1 + 2 x2 <= ... via equality x1 - x2 = 0.1
    prob = LmiProblem(c=[1.0, 1.0], f0=h, fs=np.stack([-np.eye(4), -g]), a_eq=[[1.0, -1.0]], b_eq=[0.1],
                      nonneg=[1])
    sol = solve_lmi(prob)
    lam = np.linalg.eigvalsh(prob.matrix(sol.x))[0]
    assert lam >= -1e-8 * np.linalg.norm(prob.matrix(sol.x))
    assert abs(sol.x[0] - sol.x[1] - 0.1) <= 1e-8
    assert sol.x[1] >= -1e-12
    assert sol.gap_bound <= 1e-7


def test_tighter_tolerance_never_worse():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(5, 5))
    h = a + a.T
    loose = solve_lmi(_max_q(h), tol=1e-3)
    tight = solve_lmi(_max_q(h), tol=1e-9)
    assert tight.objective >= loose.objective - 1e-3
    assert abs(tight.objective - np.linalg.eigvalsh(h)[0]) <= 1e-8


def test_infeasible_reports_certificate():
    # x - 1 >= 0 and -x - 1 >= 0 cannot both hold
    prob = LmiProblem(c=[1.0], f0=-np.eye(2), fs=np.array([[[1.0, 0], [0, -1.0]]]))
    with pytest.raises(LmiInfeasibleError) as info:
        solve_lmi(prob)
    z = info.value.certificate
    assert z is not None and info.value.margin < 0
    assert np.linalg.eigvalsh(z)[0] >= -1e-12
    # a separating direction: <Z, F0> < 0 while <Z, F1> vanishes
    assert np.trace(z @ real_embed(prob.f0)) < 0
    assert abs(np.trace(z @ real_embed(prob.fs[0]))) < 1e-3 * abs(np.trace(z @ real_embed(prob.f0)))


def test_iteration_limit():
    with pytest.raises(LmiConvergenceError) as info:
        solve_lmi(_max_q(np.diag([1.0, 2.0, 3.0])), tol=1e-12, max_iter=2)
    assert info.value.best is not None


def test_deterministic():
    rng = np.random.default_rng(8)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = a + a.conj().T
    x1 = solve_lmi(_max_q(h)).x
    x2 = solve_lmi(_max_q(h)).x
    assert x1.tobytes() == x2.tobytes()


def test_verbose_trace(caplog):
    with caplog.at_level(logging.INFO, logger="irsstealth.lmi"):
        sol = solve_lmi(_max_q(np.diag([1.0, 4.0])), verbose=True)
    lines = [r for r in caplog.records if r.name == "irsstealth.lmi"]
    assert len(lines) >= sol.iterations


def test_problem_validation():
    with pytest.raises(ValueError):
        LmiProblem(c=[1.0], f0=np.array([[0, 1], [0, 0]]), fs=np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        LmiProblem(c=[1.0, 2.0], f0=np.eye(2), fs=np.zeros((2, 2, 2)), a_eq=[[1.0]], b_eq=[0.0])
