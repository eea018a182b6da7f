"""Multi-group secure multicast: difference-of-concave rate terms, the MM-SDR
and low-complexity SOCP transmit updates, the MM element-wise pinching update,
and the alternating-optimization driver."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import ChannelSet, quadratic_form_matrix, scenario_channels
from .config import PinchingLayout, Scenario, SystemConfig, random_feasible_layout, validate_layout
from .metrics import covariance_min_rate, covariance_sinrs, secrecy_report
from .pinch_single import _GATE_SLACK, feasible_grid_mask, layout_hash
from .solvers import (ConvexQcqp, QuadConstraint, projected_supergradient_max_min,
                      rank_one_extract, solve_qcqp_convex)

_LN2 = np.log(2.0)


def _as_covariances(Ws) -> list:
    """Accept beamformer vectors or covariance matrices; return covariances."""
    out = []
    for W in Ws:
        W = np.asarray(W)
        out.append(np.outer(W, W.conj()) if W.ndim == 1 else W)
    return out


def _received_powers(channels: ChannelSet, Ws: list) -> np.ndarray:
    """q[r, g] = Tr(H_r W_g) = h_r^T W_g conj(h_r), Bobs stacked before Eves."""
    H = np.vstack([channels.bobs, channels.eves])     # (R, M)
    q = np.einsum("rm,gmn,rn->rg", H, np.array(Ws), H.conj())
    return np.maximum(np.real(q), 0.0)


def doc_rate_terms(Ws, channels: ChannelSet, scenario: Scenario):
    """Difference-of-concave log-trace terms per (g, k) and (g, l).

    Returns (F1 (G,K), J1 (G,K), F2 (G,L), J2 (L,)): F1 - J1 is Bob k's rate for
    group g's message; F2 - J2 equals minus Eve l's rate on that message. J2
    involves the full covariance sum only, so it carries no group index.
    """
    Ws = _as_covariances(Ws)
    G, K, L = scenario.G, scenario.K, scenario.L
    q = _received_powers(channels, Ws)
    qb, qe = q[:K], q[K:]
    F1 = np.empty((G, K))
    J1 = np.empty((G, K))
    for g in range(G):
        other = qb.sum(axis=1) - qb[:, g]
        F1[g] = np.log2(qb.sum(axis=1) + scenario.bob_noise)
        J1[g] = np.log2(other + scenario.bob_noise)
    F2 = np.empty((G, L))
    for g in range(G):
        F2[g] = np.log2(qe.sum(axis=1) - qe[:, g] + scenario.eve_noise)
    J2 = np.log2(qe.sum(axis=1) + scenario.eve_noise) if L else np.zeros(0)
    return F1, J1, F2, J2


def doc_objective(Ws, channels: ChannelSet, scenario: Scenario) -> float:
    """Unclamped min-over-groups DoC secrecy value; lower-bounds the exact rate."""
    F1, J1, F2, J2 = doc_rate_terms(Ws, channels, scenario)
    vals = np.empty(scenario.G)
    for g in range(scenario.G):
        members = scenario.group_members(g)
        bob = np.min(F1[g, members] - J1[g, members])
        eve = np.min(F2[g] - J2) if scenario.L else 0.0
        vals[g] = bob + eve
    return float(vals.min())


def mm_sdr_txbf_update(
    Ws_tilde: list,
    channels: ChannelSet,
    scenario: Scenario,
    P_t: float,
    max_iters: int = 2000,
) -> tuple:
    """One MM step for the covariance transmit update.

    Linearizes the concave-with-negative-sign terms at {W~_g} and maximizes the
    resulting min over (g, k, l) surrogate constraints by projected supergradient
    over the PSD blocks with the shared trace budget. Returns ({W_g}, t); on
    solver failure the expansion point is kept.
    """
    Ws_tilde = _as_covariances(Ws_tilde)
    G, K, L = scenario.G, scenario.K, scenario.L
    Hb = [quadratic_form_matrix(h) for h in channels.bobs]
    He = [quadratic_form_matrix(h) for h in channels.eves]
    q_t = _received_powers(channels, Ws_tilde)

    # expansion constants: J1 at W~ per (g, k), J2 at W~ per l
    den1 = np.empty((G, K))
    for g in range(G):
        den1[g] = q_t[:K].sum(axis=1) - q_t[:K, g] + scenario.bob_noise
    den2 = q_t[K:].sum(axis=1) + scenario.eve_noise if L else np.zeros(0)
    J1_t = np.log2(den1)
    J2_t = np.log2(den2) if L else np.zeros(0)

    def make_constraint(g, k, l):
        def f(blocks):
            qb = np.array([float(np.real(np.trace(Hb[k] @ W))) for W in blocks])
            u1 = max(qb.sum(), 0.0) + scenario.bob_noise[k]
            val = np.log2(u1)
            grads = [Hb[k] / (_LN2 * u1) for _ in range(G)]
            # -J1_hat: affine in the interfering blocks
            d_in = qb.sum() - qb[g] - (den1[g, k] - scenario.bob_noise[k])
            val -= J1_t[g, k] + d_in / (_LN2 * den1[g, k])
            for i in range(G):
                if i != g:
                    grads[i] = grads[i] - Hb[k] / (_LN2 * den1[g, k])
            if l is not None:
                qe = np.array([float(np.real(np.trace(He[l] @ W))) for W in blocks])
                u2 = max(qe.sum() - qe[g], 0.0) + scenario.eve_noise[l]
                val += np.log2(u2)
                for i in range(G):
                    if i != g:
                        grads[i] = grads[i] + He[l] / (_LN2 * u2)
                d_all = qe.sum() - (den2[l] - scenario.eve_noise[l])
                val -= J2_t[l] + d_all / (_LN2 * den2[l])
                for i in range(G):
                    grads[i] = grads[i] - He[l] / (_LN2 * den2[l])
            return val, grads
        return f

    constraints = []
    for g in range(G):
        for k in scenario.group_members(g):
            if L:
                constraints.extend(make_constraint(g, int(k), l) for l in range(L))
            else:
                constraints.append(make_constraint(g, int(k), None))

    result = projected_supergradient_max_min(constraints, P_t, Ws_tilde, max_iters=max_iters)
    if result.iterate is None:
        return [W.copy() for W in Ws_tilde], doc_objective(Ws_tilde, channels, scenario)
    return result.iterate, float(result.value)


@dataclass
class SocpBounds:
    """SINR bound bookkeeping for the low-complexity transmit update."""

    xi_b: np.ndarray          # (K,) lower bounds on each Bob's SINR
    xi_e: np.ndarray          # (G, L) upper bounds on Eve leakage SINRs
    t: float = 0.0            # secrecy slack, bits/s/Hz


def achieved_bounds(ws: list, channels: ChannelSet, scenario: Scenario) -> SocpBounds:
    """Bounds set to the SINRs achieved by {w_g}; the slack is the implied
    min over (g, k, l) of log2((1 + xi_b)/(1 + xi_e))."""
    Ws = _as_covariances(ws)
    bob, eve = covariance_sinrs(channels, Ws, scenario)
    t = np.inf
    for g in range(scenario.G):
        members = scenario.group_members(g)
        num = np.log2(1.0 + bob[members].min())
        den = np.log2(1.0 + eve[g].max()) if scenario.L else 0.0
        t = min(t, num - den)
    return SocpBounds(xi_b=bob, xi_e=eve, t=float(t))


def socp_txbf_update(
    ws_tilde: list,
    bounds: Optional[SocpBounds],
    channels: ChannelSet,
    scenario: Scenario,
    P_t: float,
    max_relax: int = 5,
) -> tuple:
    """Convexified transmit update around {w~_g} with Eve bounds held fixed.

    Bob SINR constraints use the first-order bound on |h^T w|^2 / xi; Eve
    constraints fix xi_e within the iteration; the rate coupling is linearized
    through s = 2^t, which is linear once xi_e is fixed. Infeasibility relaxes
    xi_e upward by 10% up to `max_relax` times; on persistent failure the
    expansion point and its achieved bounds are returned.

    Returns ({w_g}, SocpBounds) with the bounds refreshed to the achieved SINRs.
    """
    ws_tilde = [np.asarray(w) for w in ws_tilde]
    if bounds is None:
        bounds = achieved_bounds(ws_tilde, channels, scenario)
    G, K, L = scenario.G, scenario.K, scenario.L
    M = channels.dim
    dim_x = G * M                     # stacked beamformers
    dim_y = K + 1                     # [xi_b, s = 2^t]
    tiny = 1e-10
    # normalize to unit power budget and unit noise so the solver sees O(1) data
    root_p = np.sqrt(P_t)
    wt = [w / root_p for w in ws_tilde]
    hb = channels.bobs * (root_p / np.sqrt(scenario.bob_noise))[:, None]
    he = channels.eves * (root_p / np.sqrt(scenario.eve_noise))[:, None] if L else channels.eves

    def block(q_g, g):
        q = np.zeros(dim_x, dtype=complex)
        q[g * M:(g + 1) * M] = q_g
        return q

    def build(xi_e):
        ineqs = []
        # power budget (normalized): ||x||^2 <= 1
        ineqs.append(QuadConstraint(P=np.eye(dim_x), c=-1.0))
        # Bob constraints per (g, k)
        for g in range(G):
            for k in scenario.group_members(g):
                k = int(k)
                h = hb[k]
                H = quadratic_form_matrix(h)
                P = np.zeros((dim_x, dim_x), dtype=complex)
                for j in range(G):
                    if j != g:
                        P[j * M:(j + 1) * M, j * M:(j + 1) * M] = H
                c_t = complex(h @ wt[g])
                xi_t = max(float(bounds.xi_b[k]), tiny)
                q = block(-h.conj() * c_t / xi_t, g)
                a = np.zeros(dim_y)
                a[k] = abs(c_t) ** 2 / xi_t**2
                ineqs.append(QuadConstraint(P=P, q=q, a=a, c=1.0))
        # xi_b >= 0
        for k in range(K):
            a = np.zeros(dim_y)
            a[k] = -1.0
            ineqs.append(QuadConstraint(a=a))
        # Eve constraints per (g, l), xi_e fixed
        for g in range(G):
            for l in range(L):
                h = he[l]
                H = quadratic_form_matrix(h)
                xe = max(float(xi_e[g, l]), tiny)
                P = np.zeros((dim_x, dim_x), dtype=complex)
                P[g * M:(g + 1) * M, g * M:(g + 1) * M] = H / xe
                q = np.zeros(dim_x, dtype=complex)
                c = -1.0
                for j in range(G):
                    if j != g:
                        c_t = complex(h @ wt[j])
                        q += block(-h.conj() * c_t, j)
                        c += abs(c_t) ** 2
                ineqs.append(QuadConstraint(P=P, q=q, c=c))
        # coupling: s (1 + xi_e) <= 1 + xi_b per (g, k, l); s <= 1 + xi_b if L = 0
        for g in range(G):
            for k in scenario.group_members(g):
                k = int(k)
                factors = (1.0 + xi_e[g]) if L else np.array([1.0])
                for fac in factors:
                    a = np.zeros(dim_y)
                    a[-1] = float(fac)
                    a[k] = -1.0
                    ineqs.append(QuadConstraint(a=a, c=-1.0))
        obj_y = np.zeros(dim_y)
        obj_y[-1] = 1.0
        return ConvexQcqp(dim_x=dim_x, dim_y=dim_y, obj_y=obj_y, ineqs=ineqs)

    xi_e = np.array(bounds.xi_e, dtype=float) if L else np.zeros((G, 0))
    for _ in range(max_relax + 1):
        result = solve_qcqp_convex(build(xi_e))
        if result.status == "optimal":
            xv, yv = result.iterate
            ws = [root_p * xv[g * M:(g + 1) * M] for g in range(G)]
            return ws, achieved_bounds(ws, channels, scenario)
        xi_e = xi_e * 1.1 + 1e-12
    return [w.copy() for w in ws_tilde], achieved_bounds(ws_tilde, channels, scenario)


class PinchSurrogate:
    """Per-element grid objective for the multi-group pinching update.

    Holds the single-entry channel decomposition around PA (m, n): moving that
    PA perturbs entry m of every effective channel by a(x), so each received
    power is an explicit quadratic in a(x) with the covariance held fixed.
    """

    def __init__(self, layout: PinchingLayout, Ws: list, scenario: Scenario, cfg: SystemConfig):
        self.cfg = cfg
        self.scenario = scenario
        self.Ws = _as_covariances(Ws)
        self.layout = layout
        self.channels = scenario_channels(layout, scenario, cfg)
        self.H = np.vstack([self.channels.bobs, self.channels.eves]) \
            if scenario.L else np.array(self.channels.bobs)
        self.rx = np.vstack([scenario.bob_pos, scenario.eve_pos]) \
            if scenario.L else np.array(scenario.bob_pos)
        self.noise = np.concatenate([scenario.bob_noise, scenario.eve_noise])

    def _entry(self, x, m: int) -> np.ndarray:
        """Per-receiver contribution a(x) of one PA on waveguide m; (R, ...) complex."""
        x = np.asarray(x, dtype=float)
        dx = x[None, ...] - self.rx[:, 0].reshape((-1,) + (1,) * x.ndim)
        off = (self.layout.y[m] - self.rx[:, 1]) ** 2 + (self.layout.h - self.rx[:, 2]) ** 2
        d = np.sqrt(dx**2 + off.reshape((-1,) + (1,) * x.ndim))
        N = self.layout.x.shape[1]
        return np.sqrt(self.cfg.eta / N) * np.exp(-1j * (self.cfg.k0 * d + self.cfg.k_g * x[None, ...])) / d

    def powers_on_grid(self, m: int, n: int, cand: np.ndarray) -> np.ndarray:
        """q[r, g, c] = received power of group g at receiver r with PA (m, n) at cand[c]."""
        u = self.H.copy()
        u[:, m] -= self._entry(np.array([self.layout.x[m, n]]), m)[:, 0]
        a = self._entry(cand, m)                                  # (R, C)
        Wmat = np.array(self.Ws)                                  # (G, M, M)
        q_u = np.real(np.einsum("rm,gmn,rn->rg", u, Wmat, u.conj()))
        # cross term coefficient (W_g conj(u_r))_m per (r, g)
        v = np.einsum("gn,rn->rg", Wmat[:, m, :], u.conj())[:, :, None]
        diag = np.real(Wmat[:, m, m])[None, :, None]
        q = q_u[:, :, None] + 2.0 * np.real(a[:, None, :] * v) + (np.abs(a) ** 2)[:, None, :] * diag
        return np.maximum(q, 0.0)

    def exact_rate(self, q: np.ndarray) -> np.ndarray:
        """Exact min-over-groups secrecy rate from powers q (R, G, C) -> (C,)."""
        sc = self.scenario
        K = sc.K
        total_b = q[:K].sum(axis=1)
        total_e = q[K:].sum(axis=1)
        rates = np.full(q.shape[2], np.inf)
        for g in range(sc.G):
            members = sc.group_members(g)
            sb = q[members, g]
            sinr_b = sb / (total_b[members] - sb + sc.bob_noise[members, None])
            bob = np.log2(1.0 + sinr_b).min(axis=0)
            if sc.L:
                se = q[K:, g]
                sinr_e = se / (total_e - se + sc.eve_noise[:, None])
                bob = bob - np.log2(1.0 + sinr_e).max(axis=0)
            rates = np.minimum(rates, np.maximum(bob, 0.0))
        return rates

    def surrogate(self, q: np.ndarray, q_tilde: np.ndarray) -> np.ndarray:
        """MM surrogate min over (g, k, l) of F1 + F2 - J1_hat - J2_hat; (C,).

        q_tilde (R, G) holds the expansion-point powers; the concave terms with
        negative signs are replaced by affine bounds tight at the expansion.
        """
        sc = self.scenario
        K = sc.K
        total_b = q[:K].sum(axis=1)                      # (K, C)
        total_e = q[K:].sum(axis=1)                      # (L, C)
        vals = np.full(q.shape[2], np.inf)
        for g in range(sc.G):
            members = sc.group_members(g)
            F1 = np.log2(total_b[members] + sc.bob_noise[members, None])
            interf = total_b[members] - q[members, g]
            i_t = q_tilde[members].sum(axis=1) - q_tilde[members, g]
            den1 = _LN2 * (i_t + sc.bob_noise[members])
            J1h = np.log2(i_t + sc.bob_noise[members])[:, None] \
                + (interf - i_t[:, None]) / den1[:, None]
            term = (F1 - J1h).min(axis=0)
            if sc.L:
                eve_i = total_e - q[K:, g]
                e_t = q_tilde[K:].sum(axis=1) - q_tilde[K:, g]
                F2 = np.log2(eve_i + sc.eve_noise[:, None])
                a_t = q_tilde[K:].sum(axis=1)
                den2 = _LN2 * (a_t + sc.eve_noise)
                J2h = np.log2(a_t + sc.eve_noise)[:, None] + (total_e - a_t[:, None]) / den2[:, None]
                term = term + (F2 - J2h).min(axis=0)
            vals = np.minimum(vals, term)
        return vals


def mm_pinch_update(layout: PinchingLayout, Ws: list, scenario: Scenario, cfg: SystemConfig) -> PinchingLayout:
    """One lexicographic (m, n) sweep of MM grid updates of the PA positions.

    Each element maximizes the MM surrogate over the spacing-feasible grid
    around the current expansion point, ties broken toward the smallest x,
    and moves are accepted only if the exact secrecy rate does not decrease.
    """
    M, N = layout.x.shape
    grid = cfg.grid()
    for m in range(M):
        for n in range(N):
            surr = PinchSurrogate(layout, Ws, scenario, cfg)
            mask = feasible_grid_mask(layout.x[m], n, grid, cfg)
            if not mask.any():
                continue
            cand = grid[mask]
            q = surr.powers_on_grid(m, n, cand)
            q_tilde = surr.powers_on_grid(m, n, np.array([layout.x[m, n]]))[:, :, 0]
            vals = surr.surrogate(q, q_tilde)
            j = int(np.argmax(vals))           # first max = smallest x on ties
            new_rate = float(surr.exact_rate(q[:, :, j:j + 1])[0])
            cur_rate = float(surr.exact_rate(q_tilde[:, :, None])[0])
            if new_rate >= cur_rate - _GATE_SLACK:
                x = layout.x.copy()
                x[m, n] = float(cand[j])
                layout = PinchingLayout(x=x, y=layout.y.copy(), h=layout.h)
    return layout


@dataclass
class MultigroupResult:
    ws: list                    # rank-one beamformers per group
    Ws: list                    # covariances per group
    layout: PinchingLayout
    report: object
    trace: list = field(default_factory=list)   # rows (iteration, rate, layout_hash)
    iterations: int = 0


def _random_covariances(G: int, M: int, P_t: float, rng) -> list:
    Ws = []
    for _ in range(G):
        g = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        Ws.append(np.outer(g, g.conj()))
    tr = sum(float(np.real(np.trace(W))) for W in Ws)
    return [W * (P_t / tr) for W in Ws]


def ao_multigroup(
    scenario: Scenario,
    cfg: SystemConfig,
    txbf_method: str = "mm_sdr",
    seed=None,
    eps: float = 1e-3,
    max_iters: int = 50,
    layout: Optional[PinchingLayout] = None,
    txbf_iters: int = 2000,
) -> MultigroupResult:
    """Alternating optimization of the multi-group transmit and pinching beamformers.

    Both updates are acceptance-gated on the exact secrecy rate so the trace is
    non-decreasing. The mm_sdr path carries full covariances through the
    iterations and extracts rank-one beamformers only at the end; the socp path
    is rank-one throughout.
    """
    if txbf_method not in ("mm_sdr", "socp"):
        raise ValueError(f"unknown txbf method {txbf_method!r}")
    rng = np.random.default_rng(seed)
    if layout is None:
        layout = random_feasible_layout(cfg, rng)
    Ws = _random_covariances(cfg.G, cfg.M, cfg.P_t, rng)
    bounds = None
    if txbf_method == "socp":
        ws = [rank_one_extract(W, float(np.real(np.trace(W)))) for W in Ws]
        Ws = _as_covariances(ws)

    def rate_of(lay, covs):
        return covariance_min_rate(scenario_channels(lay, scenario, cfg), covs, scenario)

    rate = rate_of(layout, Ws)
    trace = [(0, rate, layout_hash(layout))]
    it = 0
    for it in range(1, max_iters + 1):
        layout_prev, Ws_prev = layout, Ws
        channels = scenario_channels(layout, scenario, cfg)
        if txbf_method == "mm_sdr":
            Ws_cand, _ = mm_sdr_txbf_update(Ws, channels, scenario, cfg.P_t, max_iters=txbf_iters)
        else:
            ws_cand, bounds = socp_txbf_update(ws, bounds, channels, scenario, cfg.P_t)
            Ws_cand = _as_covariances(ws_cand)
        cand_rate = covariance_min_rate(channels, Ws_cand, scenario)
        if cand_rate >= rate - _GATE_SLACK:
            Ws, rate = Ws_cand, max(cand_rate, rate)
            if txbf_method == "socp":
                ws = ws_cand

        layout = mm_pinch_update(layout, Ws, scenario, cfg)
        rate = max(rate, rate_of(layout, Ws))
        trace.append((it, rate, layout_hash(layout)))
        dW = np.sqrt(sum(np.linalg.norm(A - B) ** 2 for A, B in zip(Ws, Ws_prev)))
        w_scale = max(np.sqrt(sum(np.linalg.norm(A) ** 2 for A in Ws_prev)), 1e-30)
        if np.linalg.norm(layout.x - layout_prev.x) <= eps and dW <= eps * w_scale:
            break

    assert not validate_layout(layout, cfg)
    channels = scenario_channels(layout, scenario, cfg)
    if txbf_method == "mm_sdr":
        ws = [
            rank_one_extract(
                W, float(np.real(np.trace(W))),
                objective=lambda w, g=g: covariance_min_rate(
                    channels, [np.outer(w, w.conj()) if i == g else Ws[i] for i in range(cfg.G)],
                    scenario),
                rng=rng,
            )
            for g, W in enumerate(Ws)
        ]
    report = secrecy_report(channels, ws, scenario)
    return MultigroupResult(ws=ws, Ws=Ws, layout=layout, report=report,
                            trace=trace, iterations=it)
