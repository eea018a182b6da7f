"""Fixed-location antenna baselines: conventional MIMO (M antennas) and massive
MIMO (M*N antennas) sharing the free-space channel physics and the transmit
beamforming algorithms, with no pinching step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .config import Scenario, SystemConfig
from .metrics import covariance_min_rate, secrecy_report
from .multigroup import _as_covariances, _random_covariances, mm_sdr_txbf_update, socp_txbf_update
from .solvers import rank_one_extract
from .txbf_single import DinkelbachParams, dinkelbach_admm, sdr_single_group


@dataclass(frozen=True)
class UlaLayout:
    """Half-wavelength uniform linear array along the y-axis.

    Elements are symmetric about the center [D_x/2, 0, h].
    """

    n_elements: int
    center: tuple
    spacing: float

    def positions(self) -> np.ndarray:
        idx = np.arange(self.n_elements) - (self.n_elements - 1) / 2.0
        pos = np.tile(np.asarray(self.center, dtype=float), (self.n_elements, 1))
        pos[:, 1] += idx * self.spacing
        return pos


def make_ula(kind: str, cfg: SystemConfig) -> UlaLayout:
    """Baseline array: `conventional` has M elements, `massive` has M*N."""
    if kind == "conventional":
        n = cfg.M
    elif kind == "massive":
        n = cfg.M * cfg.N
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    return UlaLayout(n_elements=n, center=(cfg.D_x / 2.0, 0.0, cfg.h), spacing=cfg.lam / 2.0)


def ula_channels(ula: UlaLayout, scenario: Scenario, cfg: SystemConfig) -> ChannelSet:
    """Free-space LoS channels to the fixed array; no waveguide phase term."""
    pos = ula.positions()                               # (n, 3)

    def chan(rx):
        d = np.linalg.norm(pos - np.asarray(rx, dtype=float), axis=1)
        if np.any(d == 0.0):
            raise ValueError("array element and receiver positions coincide")
        return np.sqrt(cfg.eta) * np.exp(-1j * cfg.k0 * d) / d

    bobs = np.array([chan(p) for p in scenario.bob_pos])
    if scenario.L:
        eves = np.array([chan(p) for p in scenario.eve_pos])
    else:
        eves = np.zeros((0, ula.n_elements), dtype=complex)
    return ChannelSet(bobs=bobs, eves=eves)


@dataclass
class BaselineResult:
    ws: list
    report: object
    rate: float
    iterations: int = 0


def baseline_optimize(
    kind: str,
    scenario: Scenario,
    cfg: SystemConfig,
    txbf_method: str = "dinkelbach_admm",
    seed=None,
    eps: float = 1e-3,
    max_iters: int = 50,
) -> BaselineResult:
    """Transmit-only optimization over the fixed ULA channels.

    Single-group scenarios use the single-group algorithms (`sdr` or
    `dinkelbach_admm`); multi-group scenarios iterate the MM transmit updates
    (`mm_sdr` or `socp`) to convergence with no pinching step in between.
    """
    rng = np.random.default_rng(seed)
    channels = ula_channels(make_ula(kind, cfg), scenario, cfg)

    if scenario.G == 1:
        if txbf_method == "sdr":
            res = sdr_single_group(channels, scenario, cfg.P_t, seed=rng)
            ws = [res.w]
        elif txbf_method == "dinkelbach_admm":
            res = dinkelbach_admm(channels, scenario, cfg.P_t, DinkelbachParams(seed=rng))
            ws = [res.w]
        else:
            raise ValueError(f"unknown single-group txbf method {txbf_method!r}")
        report = secrecy_report(channels, ws, scenario)
        return BaselineResult(ws=ws, report=report, rate=report.min_rate, iterations=1)

    M = channels.dim
    Ws = _random_covariances(scenario.G, M, cfg.P_t, rng)
    it = 0
    if txbf_method == "mm_sdr":
        best_Ws, best_rate = Ws, covariance_min_rate(channels, Ws, scenario)
        for it in range(1, max_iters + 1):
            Ws_new, _ = mm_sdr_txbf_update(Ws, channels, scenario, cfg.P_t)
            rate = covariance_min_rate(channels, Ws_new, scenario)
            if rate > best_rate:
                best_Ws, best_rate = Ws_new, rate
            delta = np.sqrt(sum(np.linalg.norm(A - B) ** 2 for A, B in zip(Ws_new, Ws)))
            scale = max(np.sqrt(sum(np.linalg.norm(A) ** 2 for A in Ws)), 1e-30)
            Ws = Ws_new
            if delta <= eps * scale:
                break
        Ws = best_Ws
        ws = [
            rank_one_extract(
                W, float(np.real(np.trace(W))),
                objective=lambda w, g=g: covariance_min_rate(
                    channels,
                    [np.outer(w, w.conj()) if i == g else Ws[i] for i in range(scenario.G)],
                    scenario),
                rng=rng,
            )
            for g, W in enumerate(Ws)
        ]
    elif txbf_method == "socp":
        ws = [rank_one_extract(W, float(np.real(np.trace(W)))) for W in Ws]
        bounds = None
        best_ws, best_rate = ws, covariance_min_rate(channels, _as_covariances(ws), scenario)
        for it in range(1, max_iters + 1):
            ws_new, bounds = socp_txbf_update(ws, bounds, channels, scenario, cfg.P_t)
            rate = covariance_min_rate(channels, _as_covariances(ws_new), scenario)
            if rate > best_rate:
                best_ws, best_rate = ws_new, rate
            delta = np.sqrt(sum(np.linalg.norm(a - b) ** 2 for a, b in zip(ws_new, ws)))
            scale = max(np.sqrt(sum(np.linalg.norm(a) ** 2 for a in ws)), 1e-30)
            ws = ws_new
            if delta <= eps * scale:
                break
        ws = best_ws
    else:
        raise ValueError(f"unknown multi-group txbf method {txbf_method!r}")

    report = secrecy_report(channels, ws, scenario)
    return BaselineResult(ws=ws, report=report, rate=report.min_rate, iterations=it)
