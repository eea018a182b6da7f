"""Convex machinery oracles: small SDPs with known optima, weak duality,
projection properties, rank-one extraction, and a cross-solver comparison
between the supergradient method and an equivalent SDP."""

import numpy as np
import pytest

from pinchsec.solvers import (ConvexQcqp, LinearSDP, QuadConstraint, project_power_ball,
                              project_psd, projected_supergradient_max_min,
                              rank_one_extract, solve_linear_sdp, solve_qcqp_convex)


def random_hermitian(rng, d):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (A + A.conj().T)


def random_psd(rng, d):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return A @ A.conj().T


def test_sdp_min_eigenvalue_oracle(rng):
    for _ in range(5):
        C = random_hermitian(rng, 4)
        prob = LinearSDP(C=C, constraints=[(np.eye(4, dtype=complex), "==", 1.0)], dim=4)
        res = solve_linear_sdp(prob)
        assert res.ok
        lam_min = np.linalg.eigvalsh(C).min()
        assert res.value == pytest.approx(lam_min, abs=1e-6)


def test_sdp_trace_cap():
    d = 3
    prob = LinearSDP(C=-np.eye(d), constraints=[], dim=d, trace_cap=2.5)
    res = solve_linear_sdp(prob)
    assert res.ok
    assert res.value == pytest.approx(-2.5, abs=1e-6)


def test_sdp_weak_duality(rng):
    for _ in range(5):
        C = random_hermitian(rng, 3) + 3 * np.eye(3)
        cons = [(random_psd(rng, 3), ">=", 1.0), (np.eye(3, dtype=complex), "<=", 5.0)]
        res = solve_linear_sdp(LinearSDP(C=C, constraints=cons, dim=3))
        assert res.ok
        # reconstructed dual value must not exceed the primal (weak duality)
        assert res.residuals["dual_value"] <= res.value + 1e-6
        assert res.residuals["rel_gap"] < 1e-5


def test_sdp_infeasible_detected():
    cons = [(np.eye(2), "<=", 1.0), (np.eye(2), ">=", 3.0)]
    res = solve_linear_sdp(LinearSDP(C=np.eye(2), constraints=cons, dim=2))
    assert res.status == "infeasible"


def test_project_psd_properties(rng):
    for _ in range(10):
        H = random_hermitian(rng, 4)
        P = project_psd(H)
        assert np.linalg.eigvalsh(P).min() >= -1e-12
        assert np.allclose(project_psd(P), P, atol=1e-12)          # idempotent
        # projection is the closest PSD matrix: no PSD sample is closer
        S = random_psd(rng, 4)
        assert np.linalg.norm(H - P) <= np.linalg.norm(H - S) + 1e-12


def test_project_power_ball(rng):
    w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    P_t = 0.5 * np.linalg.norm(w) ** 2
    proj = project_power_ball(w, P_t)
    assert np.linalg.norm(proj) ** 2 == pytest.approx(P_t, rel=1e-12)
    inside = 0.1 * w
    assert np.array_equal(project_power_ball(inside, P_t), inside)   # untouched


def test_rank_one_extract_exact_on_rank_one(rng):
    v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    W = np.outer(v, v.conj())
    w = rank_one_extract(W, 2.0)
    assert np.linalg.norm(w) ** 2 == pytest.approx(2.0, rel=1e-10)
    # direction matches v up to a global phase
    cos = abs(np.vdot(v, w)) / (np.linalg.norm(v) * np.linalg.norm(w))
    assert cos == pytest.approx(1.0, abs=1e-10)


def test_rank_one_extract_randomization_improves(rng):
    W = random_psd(rng, 4)
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)

    def score(w):
        return abs(h @ w) ** 2

    lam, V = np.linalg.eigh(0.5 * (W + W.conj().T))
    principal = V[:, -1] * np.sqrt(3.0)
    w = rank_one_extract(W, 3.0, objective=score, rng=np.random.default_rng(0))
    assert np.linalg.norm(w) ** 2 == pytest.approx(3.0, rel=1e-9)
    assert score(w) >= score(principal) - 1e-15
    again = rank_one_extract(W, 3.0, objective=score, rng=np.random.default_rng(0))
    assert np.array_equal(w, again)                                 # seeded determinism


def _maxmin_sdp_value(As, cs, P_t):
    """Oracle: max_{W>=0, TrW<=P} min_j Tr(A_j W) + c_j as an epigraph SDP."""
    d = As[0].shape[0]
    cons = []
    for A, c in zip(As, cs):
        At = np.zeros((d + 1, d + 1), dtype=complex)
        At[:d, :d] = A
        At[d, d] = -1.0
        cons.append((At, ">=", -c))
    Pw = np.zeros((d + 1, d + 1), dtype=complex)
    Pw[:d, :d] = np.eye(d)
    cons.append((Pw, "<=", P_t))
    C = np.zeros((d + 1, d + 1), dtype=complex)
    C[d, d] = -1.0
    res = solve_linear_sdp(LinearSDP(C=C, constraints=cons, dim=d + 1))
    assert res.ok
    return -res.value


def test_supergradient_matches_sdp(rng):
    d, P_t = 3, 2.0
    for trial in range(3):
        As = [random_psd(rng, d) for _ in range(3)]
        cs = [0.5 + rng.uniform(0, 1) for _ in range(3)]
        want = _maxmin_sdp_value(As, cs, P_t)

        def make(A, c):
            def f(blocks):
                W = blocks[0]
                return float(np.real(np.trace(A @ W))) + c, [A]
            return f

        start = [np.eye(d, dtype=complex) * (P_t / d)]
        res = projected_supergradient_max_min([make(A, c) for A, c in zip(As, cs)],
                                              P_t, start, max_iters=4000)
        assert res.value == pytest.approx(want, rel=2e-3)
        # log-monotone wrapper reaches log2 of the same optimum
        def make_log(A, c):
            def f(blocks):
                W = blocks[0]
                u = float(np.real(np.trace(A @ W))) + c
                return np.log2(u), [A / (np.log(2.0) * u)]
            return f

        res_log = projected_supergradient_max_min([make_log(A, c) for A, c in zip(As, cs)],
                                                  P_t, start, max_iters=4000)
        assert res_log.value == pytest.approx(np.log2(want), rel=2e-3)


def test_supergradient_respects_feasible_set(rng):
    d, P_t = 3, 1.5
    A = random_psd(rng, d)

    def f(blocks):
        return float(np.real(np.trace(A @ blocks[0]))), [A]

    res = projected_supergradient_max_min([f], P_t, [np.eye(d, dtype=complex)])
    W = res.iterate[0]
    assert np.linalg.eigvalsh(0.5 * (W + W.conj().T)).min() >= -1e-9
    assert np.real(np.trace(W)) <= P_t + 1e-9


def test_qcqp_norm_ball_oracle(rng):
    b = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    prob = ConvexQcqp(dim_x=3, obj_x=b,
                      ineqs=[QuadConstraint(P=np.eye(3), c=-1.0)])
    res = solve_qcqp_convex(prob)
    assert res.ok
    assert res.value == pytest.approx(np.linalg.norm(b), rel=1e-6)
    x, _ = res.iterate
    cos = abs(np.vdot(b, x)) / (np.linalg.norm(b) * np.linalg.norm(x))
    assert cos == pytest.approx(1.0, abs=1e-6)


def test_qcqp_linear_real_variable():
    prob = ConvexQcqp(dim_x=1, dim_y=1, obj_y=np.array([1.0]),
                      ineqs=[QuadConstraint(a=np.array([1.0]), c=-3.0)])
    res = solve_qcqp_convex(prob)
    assert res.ok
    assert res.value == pytest.approx(3.0, abs=1e-7)


def test_qcqp_infeasible_detected():
    prob = ConvexQcqp(dim_x=1, dim_y=1, obj_y=np.array([1.0]),
                      ineqs=[QuadConstraint(a=np.array([1.0]), c=1.0),
                             QuadConstraint(a=np.array([-1.0]), c=1.0)])
    res = solve_qcqp_convex(prob)
    assert res.status == "infeasible"
