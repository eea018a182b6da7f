"""Channel model oracles: guided phase, free-space entries, and the effective
channel against an explicit block-diagonal assembly."""

import numpy as np
import pytest

from pinchsec.channel import (effective_channel, freespace_entry, inwaveguide_vector,
                              quadratic_form_matrix, scenario_channels)
from pinchsec.config import PinchingLayout, random_feasible_layout, waveguide_y_coords

from conftest import random_scenario, small_config


def test_inwaveguide_magnitude_and_phase():
    cfg = small_config()
    x = np.array([0.0, 1.0, 2.5])
    v = inwaveguide_vector(x, cfg)
    assert np.allclose(np.abs(v), 1 / np.sqrt(3))
    assert v[0] == pytest.approx(1 / np.sqrt(3))           # zero phase at x = 0
    assert np.angle(v[1]) == pytest.approx(np.angle(np.exp(-1j * cfg.k_g * 1.0)))


def test_freespace_entry_magnitude():
    cfg = small_config()
    val = freespace_entry(np.array([0.0, 0.0, 3.0]), np.array([0.0, 0.0, 0.0]), cfg)
    assert abs(val) == pytest.approx(np.sqrt(cfg.eta) / 3.0, rel=1e-12)
    with pytest.raises(ValueError):
        freespace_entry(np.zeros(3), np.zeros(3), cfg)


def explicit_psi_channel(layout, rx, cfg):
    """Oracle: assemble h (length MN) and block-diagonal Psi explicitly."""
    M, N = layout.x.shape
    h = np.empty(M * N, dtype=complex)
    Psi = np.zeros((M * N, M), dtype=complex)
    pos = layout.positions().reshape(M * N, 3)
    for i in range(M * N):
        h[i] = freespace_entry(pos[i], rx, cfg)
    for m in range(M):
        for n in range(N):
            Psi[m * N + n, m] = np.sqrt(1.0 / N) * np.exp(-1j * cfg.k_g * layout.x[m, n])
    return h @ Psi


def test_effective_channel_matches_explicit_psi():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        M, N = rng.integers(1, 4), rng.integers(1, 4)
        cfg = small_config(M=int(M), N=int(N))
        layout = random_feasible_layout(cfg, rng)
        rx = np.array([rng.uniform(0, 10), rng.uniform(0, 10), 0.0])
        got = effective_channel(layout, rx, cfg)
        want = explicit_psi_channel(layout, rx, cfg)
        assert np.allclose(got, want, atol=1e-12, rtol=1e-12)


def test_effective_channel_coincident_raises():
    cfg = small_config(M=1, N=1)
    layout = PinchingLayout(x=np.array([[1.0]]), y=waveguide_y_coords(cfg), h=cfg.h)
    rx = np.array([1.0, layout.y[0], cfg.h])
    with pytest.raises(ValueError):
        effective_channel(layout, rx, cfg)


def test_scenario_channels_shapes(rng):
    cfg = small_config(M=3, N=2)
    sc = random_scenario(rng, K=2, L=3)
    layout = random_feasible_layout(cfg, rng)
    ch = scenario_channels(layout, sc, cfg)
    assert ch.bobs.shape == (2, 3) and ch.eves.shape == (3, 3)
    assert ch.dim == 3


def test_scenario_channels_no_eves(rng):
    cfg = small_config(M=2)
    sc = random_scenario(rng, K=2, L=0)
    ch = scenario_channels(random_feasible_layout(cfg, rng), sc, cfg)
    assert ch.eves.shape == (0, 2)


def test_quadratic_form_matrix_property(rng):
    for _ in range(20):
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        A = quadratic_form_matrix(h)
        assert np.allclose(A, A.conj().T)
        assert np.real(w.conj() @ A @ w) == pytest.approx(abs(h @ w) ** 2, rel=1e-12)
