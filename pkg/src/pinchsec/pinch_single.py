"""Single-group pinching beamforming: element-wise sequential grid search over
PA positions plus the alternating-optimization driver coupling it with the
transmit beamformer."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .channel import scenario_channels
from .config import (PinchingLayout, Scenario, SystemConfig, random_feasible_layout,
                     validate_layout)
from .metrics import secrecy_report
from .txbf_single import DinkelbachParams, dinkelbach_admm, sdr_single_group

_GATE_SLACK = 1e-12


class ElementDecomposition:
    """Noise-normalized per-PA channel contributions for one beamformer w.

    For receiver r the scalar T_r = h_hat_r^T w / sigma_r decomposes into a sum
    of per-PA terms; moving one PA changes a single term, so fixed sums over
    the remaining PAs are maintained incrementally. Bobs come first in the
    receiver stacking, Eves after.
    """

    def __init__(self, layout: PinchingLayout, w: np.ndarray, scenario: Scenario, cfg: SystemConfig):
        self.cfg = cfg
        self.scenario = scenario
        self.w = np.asarray(w)
        self.x = np.array(layout.x)            # (M, N), mutated by accepted moves
        self.y = np.array(layout.y)
        self.h = layout.h
        self.rx = np.vstack([scenario.bob_pos, scenario.eve_pos]) if scenario.L else np.array(scenario.bob_pos)
        self.sigma = np.sqrt(np.concatenate([scenario.bob_noise, scenario.eve_noise]))
        self.K = scenario.K
        self.terms = self._all_terms()          # (R, M, N)
        self.totals = self.terms.sum(axis=(1, 2))

    def _all_terms(self) -> np.ndarray:
        M, N = self.x.shape
        R = self.rx.shape[0]
        out = np.empty((R, M, N), dtype=complex)
        for m in range(M):
            out[:, m, :] = self.contribution(self.x[m][None, :], m)[:, 0, :]
        return out

    def contribution(self, x, m: int) -> np.ndarray:
        """Per-receiver term of PA(s) on waveguide m at position(s) x.

        x broadcasts as (..., n) candidate coordinates; returns (R, ...) complex.
        """
        x = np.asarray(x, dtype=float)
        dx = x[None, ...] - self.rx[:, 0].reshape((-1,) + (1,) * x.ndim)
        dy = self.y[m] - self.rx[:, 1]
        dz = self.h - self.rx[:, 2]
        d = np.sqrt(dx**2 + (dy**2 + dz**2).reshape((-1,) + (1,) * x.ndim))
        amp = np.sqrt(self.cfg.eta / self.x.shape[1]) * self.w[m] / self.sigma.reshape((-1,) + (1,) * x.ndim)
        return amp * np.exp(-1j * (self.cfg.k0 * d + self.cfg.k_g * x[None, ...])) / d

    def s_minus(self, m: int, n: int) -> np.ndarray:
        """Fixed complex sums over every other PA (all waveguides included)."""
        return self.totals - self.terms[:, m, n]

    def set_element(self, m: int, n: int, x_new: float) -> None:
        new_term = self.contribution(np.array([x_new]), m)[:, 0]
        self.totals = self.totals - self.terms[:, m, n] + new_term
        self.terms[:, m, n] = new_term
        self.x[m, n] = x_new

    def recompute(self) -> None:
        self.terms = self._all_terms()
        self.totals = self.terms.sum(axis=(1, 2))

    def layout(self) -> PinchingLayout:
        return PinchingLayout(x=self.x.copy(), y=self.y.copy(), h=self.h)

    def rate_with_totals(self, totals: np.ndarray) -> float:
        """Exact single-group secrecy rate from the receiver scalars."""
        bob = np.abs(totals[: self.K]) ** 2
        eve = np.abs(totals[self.K:]) ** 2
        leak = np.max(np.log2(1.0 + eve)) if eve.size else 0.0
        return float(max(np.min(np.log2(1.0 + bob)) - leak, 0.0))

    def exact_rate(self) -> float:
        return self.rate_with_totals(self.totals)


def element_objective(decomp: ElementDecomposition, m: int, n: int, x) -> np.ndarray:
    """Surrogate SINR-difference objective for moving PA (m, n) to x.

    min over Bobs of |A|^2 + 2 Re{S* A} minus the max over Eves of the same,
    clamped at zero; the |S|^2 constants are dropped.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    A = decomp.contribution(x, m)                       # (R, Qx)
    S = decomp.s_minus(m, n)[:, None]
    val = np.abs(A) ** 2 + 2.0 * np.real(S.conj() * A)  # (R, Qx)
    bob = val[: decomp.K].min(axis=0)
    eve = val[decomp.K:].max(axis=0) if decomp.scenario.L else 0.0
    return np.maximum(bob - eve, 0.0)


def feasible_grid_mask(x_row: np.ndarray, n: int, grid: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Grid points keeping row ordering and the minimum-spacing constraint."""
    lo, hi = 0.0, cfg.D_x
    if n > 0:
        lo = max(lo, x_row[n - 1] + cfg.delta_min)
    if n < x_row.size - 1:
        hi = min(hi, x_row[n + 1] - cfg.delta_min)
    tol = 1e-12 * max(1.0, cfg.D_x)
    return (grid >= lo - tol) & (grid <= hi + tol)


def update_element(decomp: ElementDecomposition, m: int, n: int, cfg: SystemConfig) -> float:
    """Grid argmax of the element surrogate, gated on the exact rate.

    Ties break toward the smallest x; with no feasible grid point or a move
    that would lower the exact secrecy rate, the element stays put.
    """
    grid = cfg.grid()
    mask = feasible_grid_mask(decomp.x[m], n, grid, cfg)
    if not mask.any():
        return float(decomp.x[m, n])
    cand = grid[mask]
    vals = element_objective(decomp, m, n, cand)
    x_new = float(cand[int(np.argmax(vals))])  # first max = smallest x on ties
    # acceptance gate on the exact objective
    new_totals = decomp.totals - decomp.terms[:, m, n] + decomp.contribution(np.array([x_new]), m)[:, 0]
    if decomp.rate_with_totals(new_totals) >= decomp.exact_rate() - _GATE_SLACK:
        decomp.set_element(m, n, x_new)
    return float(decomp.x[m, n])


def sweep_elements(decomp: ElementDecomposition, cfg: SystemConfig) -> None:
    """One full (m, n)-lexicographic pass of element updates."""
    M, N = decomp.x.shape
    for m in range(M):
        for n in range(N):
            update_element(decomp, m, n, cfg)


def layout_hash(layout: PinchingLayout) -> str:
    return hashlib.sha1(np.ascontiguousarray(layout.x).tobytes()).hexdigest()[:12]


@dataclass
class AoResult:
    w: object                  # beamformer (vector) or list of vectors
    layout: PinchingLayout
    report: object
    trace: list = field(default_factory=list)   # rows (iteration, rate, layout_hash)
    iterations: int = 0


def _random_beamformer(M: int, P_t: float, rng) -> np.ndarray:
    g = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return np.sqrt(P_t) * g / np.linalg.norm(g)


def ao_single_group(
    scenario: Scenario,
    cfg: SystemConfig,
    txbf_method: str = "dinkelbach_admm",
    seed=None,
    eps: float = 1e-3,
    max_iters: int = 50,
    layout: Optional[PinchingLayout] = None,
    dinkelbach_params: Optional[DinkelbachParams] = None,
) -> AoResult:
    """Alternating optimization of transmit and pinching beamformers (single group).

    Both updates are acceptance-gated on the exact secrecy rate, so the rate
    trace is non-decreasing. Stops when both iterate changes fall below eps.
    """
    if scenario.G != 1:
        raise ValueError("ao_single_group requires a single-group scenario")
    if txbf_method not in ("sdr", "dinkelbach_admm"):
        raise ValueError(f"unknown txbf method {txbf_method!r}")
    rng = np.random.default_rng(seed)
    if layout is None:
        layout = random_feasible_layout(cfg, rng)
    w = _random_beamformer(cfg.M, cfg.P_t, rng)

    def rate_of(lay, wv):
        return secrecy_report(scenario_channels(lay, scenario, cfg), [wv], scenario).min_rate

    rate = rate_of(layout, w)
    trace = [(0, rate, layout_hash(layout))]
    it = 0
    for it in range(1, max_iters + 1):
        w_prev, layout_prev = w, layout
        channels = scenario_channels(layout, scenario, cfg)
        if txbf_method == "sdr":
            w_cand = sdr_single_group(channels, scenario, cfg.P_t, seed=rng).w
        else:
            params = replace(dinkelbach_params or DinkelbachParams(), seed=rng)
            w_cand = dinkelbach_admm(channels, scenario, cfg.P_t, params).w
        cand_rate = secrecy_report(channels, [w_cand], scenario).min_rate
        if cand_rate >= rate - _GATE_SLACK:
            w, rate = w_cand, max(cand_rate, rate)

        decomp = ElementDecomposition(layout, w, scenario, cfg)
        sweep_elements(decomp, cfg)
        layout = decomp.layout()
        rate = max(rate, rate_of(layout, w))
        trace.append((it, rate, layout_hash(layout)))
        w_scale = max(np.linalg.norm(w_prev), 1e-30)
        if (np.linalg.norm(layout.x - layout_prev.x) <= eps
                and np.linalg.norm(w - w_prev) <= eps * w_scale):
            break

    assert not validate_layout(layout, cfg)
    report = secrecy_report(scenario_channels(layout, scenario, cfg), [w], scenario)
    return AoResult(w=w, layout=layout, report=report, trace=trace, iterations=it)
