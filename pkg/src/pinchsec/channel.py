"""In-waveguide propagation, free-space LoS channels, and effective channels.

Conventions: effective channels enter quadratic forms through the transpose,
|h^T w|^2 = w^H (conj(h) h^T) w. This transpose convention is kept throughout;
do not "correct" it to h^H w.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PinchingLayout, Scenario, SystemConfig


def inwaveguide_vector(p_row: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Guided-phase vector for one waveguide: entry n = sqrt(1/N) exp(-j k_g x_n).

    Equal power split across the N PAs, so every entry has magnitude 1/sqrt(N).
    """
    x = np.asarray(p_row, dtype=float)
    return np.sqrt(1.0 / x.size) * np.exp(-1j * cfg.k_g * x)


def freespace_entry(pa_pos: np.ndarray, rx_pos: np.ndarray, cfg: SystemConfig) -> complex:
    """Free-space LoS coefficient sqrt(eta) exp(-j k0 d) / d from one PA to one receiver."""
    d = float(np.linalg.norm(np.asarray(pa_pos, dtype=float) - np.asarray(rx_pos, dtype=float)))
    if d == 0.0:
        raise ValueError("PA and receiver positions coincide (singular channel)")
    return np.sqrt(cfg.eta) * np.exp(-1j * cfg.k0 * d) / d


def effective_channel(layout: PinchingLayout, rx_pos: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Effective channel h_hat (length M): h^T Psi(P) without materializing Psi.

    Entry m sums the waveguide-m PA contributions only (block-diagonal structure):
        sum_n sqrt(eta) e^{-j k0 d_mn} / d_mn * sqrt(1/N) e^{-j k_g x_mn}.
    """
    rx = np.asarray(rx_pos, dtype=float)
    pos = layout.positions()                        # (M, N, 3)
    d = np.linalg.norm(pos - rx, axis=2)            # (M, N)
    if np.any(d == 0.0):
        raise ValueError("PA and receiver positions coincide (singular channel)")
    N = layout.x.shape[1]
    terms = np.sqrt(cfg.eta) * np.exp(-1j * (cfg.k0 * d + cfg.k_g * layout.x)) / d
    return np.sqrt(1.0 / N) * terms.sum(axis=1)


@dataclass(frozen=True)
class ChannelSet:
    """Effective channels for every receiver: rows are per-receiver length-M vectors."""

    bobs: np.ndarray   # (K, M) complex
    eves: np.ndarray   # (L, M) complex

    @property
    def dim(self) -> int:
        return self.bobs.shape[1]


def scenario_channels(layout: PinchingLayout, scenario: Scenario, cfg: SystemConfig) -> ChannelSet:
    bobs = np.array([effective_channel(layout, p, cfg) for p in scenario.bob_pos])
    if scenario.L:
        eves = np.array([effective_channel(layout, p, cfg) for p in scenario.eve_pos])
    else:
        eves = np.zeros((0, bobs.shape[1]), dtype=complex)
    return ChannelSet(bobs=bobs, eves=eves)


def quadratic_form_matrix(h: np.ndarray) -> np.ndarray:
    """Hermitian PSD matrix A with w^H A w = |h^T w|^2, i.e. A = conj(h) h^T."""
    h = np.asarray(h)
    return np.outer(h.conj(), h)
