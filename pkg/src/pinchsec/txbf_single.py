"""Single-group transmit beamforming with a fixed pinching layout.

Two paths: an SDR with Charnes-Cooper scaling giving an upper bound plus an
extracted feasible beamformer, and a low-complexity Dinkelbach outer loop with
an LSE-smoothed objective minimized by an ADMM variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import ChannelSet, quadratic_form_matrix
from .config import Scenario
from .metrics import secrecy_report
from .solvers import LinearSDP, project_power_ball, rank_one_extract, solve_linear_sdp


def _ratio_matrices(channels: ChannelSet, scenario: Scenario, P_t: float):
    """B_r = (1/M) I + P_eff,r conj(h_r) h_r^T with P_eff,r = P_t / sigma_r^2.

    With this scaling w^H B_r w = P_t (1/M + SINR_r) at full power, so the
    Eve/Bob ratio of quadratic forms matches the fractional surrogate exactly.
    """
    M = channels.dim
    eye = np.eye(M) / M
    B_bob = np.array([
        eye + (P_t / scenario.bob_noise[k]) * quadratic_form_matrix(channels.bobs[k])
        for k in range(scenario.K)
    ])
    B_eve = np.array([
        eye + (P_t / scenario.eve_noise[l]) * quadratic_form_matrix(channels.eves[l])
        for l in range(scenario.L)
    ]) if scenario.L else np.zeros((0, M, M), dtype=complex)
    return B_bob, B_eve


@dataclass
class SdrResult:
    w: np.ndarray             # feasible beamformer, ||w||^2 = P_t
    upper_bound_ratio: float  # relaxation value of the fractional surrogate (>= any feasible w's)
    upper_bound_rate: float   # log2 of the ratio, clamped at 0 [bits/s/Hz]
    rate: float               # exact achieved secrecy rate of w [bits/s/Hz]
    status: str


def sdr_single_group(
    channels: ChannelSet,
    scenario: Scenario,
    P_t: float,
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-7,
    randomization_trials: int = 200,
    seed=None,
) -> SdrResult:
    """Upper-bound transmit beamformer via SDR + Charnes-Cooper.

    Solves min_gamma over {W >= 0, Tr(W B_k) >= 1, Tr(W B_l) <= gamma} with the
    epigraph variable gamma carried as an extra 1x1 diagonal block; the feasible
    beamformer comes from rank-one extraction rescaled to full power, and the
    achieved rate is always recomputed exactly.
    """
    if scenario.G != 1:
        raise ValueError("sdr_single_group requires a single-group scenario")
    M = channels.dim
    B_bob, B_eve = _ratio_matrices(channels, scenario, P_t)

    def blk(B, s):
        A = np.zeros((M + 1, M + 1), dtype=complex)
        A[:M, :M] = B
        A[M, M] = s
        return A

    cons = []
    if scenario.L:
        # Charnes-Cooper scaled form: the trace cap Tr(W_tilde) <= zeta is vacuous
        # (zeta is free), so no trace constraint appears here.
        C = blk(np.zeros((M, M)), 1.0)  # min gamma
        for B in B_eve:
            cons.append((blk(B, -1.0), "<=", 0.0))
        for B in B_bob:
            cons.append((blk(B, 0.0), ">=", 1.0))
    else:
        # no Eves: directly maximize the worst Bob quadratic form on the unit trace ball
        C = blk(np.zeros((M, M)), -1.0)
        cons.append((blk(np.eye(M), 0.0), "<=", 1.0))
        for B in B_bob:
            cons.append((blk(B, -1.0), ">=", 0.0))
    status = solve_linear_sdp(LinearSDP(C=C, constraints=cons, dim=M + 1), feas_tol, gap_tol)
    if status.iterate is None:
        raise RuntimeError(f"SDR solve failed: {status.status} {status.residuals}")
    X = status.iterate
    W = X[:M, :M]
    tr = float(np.real(np.trace(W)))
    if tr <= 0:
        raise RuntimeError("SDR returned a zero matrix")
    W = W / tr
    if scenario.L:
        gamma = float(np.real(X[M, M]))
        ratio_ub = 1.0 / gamma
    else:
        ratio_ub = float(np.real(X[M, M]))

    def achieved_rate(w_unit: np.ndarray) -> float:
        w = np.sqrt(P_t) * w_unit / np.linalg.norm(w_unit)
        return secrecy_report(channels, [w], scenario).min_rate

    w_unit = rank_one_extract(W, 1.0, objective=achieved_rate,
                              trials=randomization_trials, rng=seed)
    w = np.sqrt(P_t) * w_unit / np.linalg.norm(w_unit)
    return SdrResult(
        w=w,
        upper_bound_ratio=ratio_ub,
        upper_bound_rate=max(0.0, float(np.log2(ratio_ub))) if scenario.L else float(np.log2(ratio_ub)),
        rate=secrecy_report(channels, [w], scenario).min_rate,
        status=status.status,
    )


@dataclass
class SmoothedObjective:
    """LSE-smoothed fractional objective f1/f2 with Dinkelbach parameter varsigma.

    f1 smooths the max over Eve quadratic forms, f2 the min over Bob forms;
    both use the max-shifted LSE in natural log (scale-invariant for argmin),
    rates are reported in log2 elsewhere.
    """

    B_bob: np.ndarray    # (K, M, M)
    B_eve: np.ndarray    # (L, M, M)
    beta: float
    varsigma: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("smoothing beta must be positive")

    @property
    def n_eves(self) -> int:
        return self.B_eve.shape[0]

    def quad_forms(self, w: np.ndarray):
        a_bob = np.real(np.einsum("i,kij,j->k", w.conj(), self.B_bob, w))
        a_eve = np.real(np.einsum("i,lij,j->l", w.conj(), self.B_eve, w))
        return a_bob, a_eve


def _lse(a: np.ndarray) -> tuple[float, np.ndarray]:
    """Max-shifted log-sum-exp and its softmax weights."""
    m = a.max()
    e = np.exp(a - m)
    s = e.sum()
    return float(m + np.log(s)), e / s


def lse_value_and_gradient(state: SmoothedObjective, w: np.ndarray):
    """Return (f1, f2, phi_varsigma, grad phi) at w.

    The complex gradient g is the one whose real-vector form is
    [Re g; Im g] over (Re w, Im w); for a = w^H B w that is g = 2 B w.
    """
    a_bob, a_eve = state.quad_forms(w)
    beta = state.beta
    if state.n_eves:
        lse_e, s = _lse(a_eve / beta)
        f1 = beta * lse_e
        grad_f1 = 2.0 * ((s[:, None, None] * state.B_eve).sum(axis=0) @ w)
    else:
        f1, grad_f1 = 1.0, np.zeros_like(w)  # no leakage: constant numerator
    lse_b, t = _lse(-a_bob / beta)
    f2 = -beta * lse_b
    grad_f2 = 2.0 * ((t[:, None, None] * state.B_bob).sum(axis=0) @ w)
    phi = f1 - state.varsigma * f2
    grad = grad_f1 - state.varsigma * grad_f2
    return float(f1), float(f2), float(phi), grad


@dataclass
class AdmmState:
    u: np.ndarray
    w: np.ndarray
    nu: np.ndarray
    rho: float
    alpha: float
    L_phi: float


@dataclass
class DinkelbachParams:
    beta: Optional[float] = None   # None: scale-aware default from the start point
    beta_rel: float = 0.05
    outer_iters: int = 50
    inner_iters: int = 50
    n_starts: int = 3
    phi_tol: float = 1e-10
    seed: object = None


@dataclass
class DinkelbachResult:
    w: np.ndarray
    rate: float
    trace: list                    # rows (iteration, varsigma, phi, rate)
    varsigma: float
    beta: float


def _lipschitz_estimate(state: SmoothedObjective, P_t: float) -> float:
    """Gradient Lipschitz estimate: twice the spectral norm of the quadratic-form
    curvature envelope over the softmax weights. The best-iterate bookkeeping in
    the ADMM loop absorbs the (ignored) LSE curvature."""
    lam_e = max((float(np.linalg.norm(B, 2)) for B in state.B_eve), default=0.0)
    lam_b = max((float(np.linalg.norm(B, 2)) for B in state.B_bob), default=0.0)
    return max(2.0 * (lam_e + state.varsigma * lam_b), 1e-30)


def _admm_minimize(state: SmoothedObjective, w0: np.ndarray, P_t: float, inner_iters: int):
    """ADMM variant for min phi_varsigma over the power ball: linearized u-step
    with ball projection, closed-form w-step, dual ascent. Returns the best
    feasible u iterate (u always satisfies the power constraint)."""
    L = _lipschitz_estimate(state, P_t)
    adm = AdmmState(u=project_power_ball(w0, P_t), w=np.array(w0), nu=np.zeros_like(w0),
                    rho=4.0 * L, alpha=8.0 / (37.0 * L), L_phi=L)
    best_u = adm.u.copy()
    best_phi = lse_value_and_gradient(state, adm.u)[2]
    for _ in range(inner_iters):
        adm.u = project_power_ball(adm.u - adm.alpha * (adm.nu + adm.rho * (adm.u - adm.w)), P_t)
        _, _, phi_u, grad_u = lse_value_and_gradient(state, adm.u)
        adm.w = adm.u - (grad_u - adm.nu) / adm.rho
        adm.nu = adm.nu + adm.rho * (adm.u - adm.w)
        if phi_u < best_phi:
            best_phi, best_u = phi_u, adm.u.copy()
    return best_u, best_phi


def _default_beta(state: SmoothedObjective, w0: np.ndarray, beta_rel: float) -> float:
    a_bob, _ = state.quad_forms(w0)
    K = a_bob.size
    # keep f2 = -beta log sum exp(-a/beta) strictly positive: beta << a_min / log K
    return max(beta_rel * float(a_bob.min()) / max(1.0, np.log(K + 1.0)), 1e-300)


def dinkelbach_admm(
    channels: ChannelSet,
    scenario: Scenario,
    P_t: float,
    params: DinkelbachParams = DinkelbachParams(),
) -> DinkelbachResult:
    """Dinkelbach fractional programming on the LSE-smoothed secrecy surrogate.

    Outer loop updates varsigma = f1/f2 and minimizes phi_varsigma by ADMM; a
    candidate is accepted only if it lowers phi below the current iterate's
    value (which is 0 by construction), so the varsigma trace is non-increasing.
    Multi-start; the best run by exact achieved rate is returned, at full power.
    """
    if scenario.G != 1:
        raise ValueError("dinkelbach_admm requires a single-group scenario")
    M = channels.dim
    B_bob, B_eve = _ratio_matrices(channels, scenario, P_t)
    rng = np.random.default_rng(params.seed)

    def exact_rate(w):
        return secrecy_report(channels, [w], scenario).min_rate

    # deterministic matched-filter-style start plus random restarts
    starts = [np.sqrt(P_t) * _normalize(channels.bobs.conj().sum(axis=0))]
    for _ in range(max(params.n_starts - 1, 0)):
        g = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        starts.append(np.sqrt(P_t) * _normalize(g))

    best = None
    for w0 in starts:
        state = SmoothedObjective(B_bob=B_bob, B_eve=B_eve, beta=1.0)
        state.beta = params.beta if params.beta is not None else _default_beta(state, w0, params.beta_rel)
        w = np.array(w0)
        trace = []
        for j in range(params.outer_iters):
            f1, f2, _, _ = lse_value_and_gradient(state, w)
            while f2 <= 0.0 and params.beta is None:
                state.beta /= 10.0
                f1, f2, _, _ = lse_value_and_gradient(state, w)
            if f2 <= 0.0:
                break
            state.varsigma = f1 / f2
            cand, phi_cand = _admm_minimize(state, w, P_t, params.inner_iters)
            f2_cand = lse_value_and_gradient(state, cand)[1]
            trace.append((j, state.varsigma, phi_cand, exact_rate(np.sqrt(P_t) * _normalize(w))))
            if phi_cand < -params.phi_tol and f2_cand > 0.0:
                w = cand
            else:
                break
        w_final = np.sqrt(P_t) * _normalize(w)
        rate = exact_rate(w_final)
        result = DinkelbachResult(w=w_final, rate=rate, trace=trace,
                                  varsigma=state.varsigma, beta=state.beta)
        if best is None or rate > best.rate:
            best = result
    return best


def _normalize(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        out = np.zeros_like(v)
        out[0] = 1.0
        return out
    return v / n
