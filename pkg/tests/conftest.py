"""Shared fixtures and scenario builders for the test suite."""

import numpy as np
import pytest

from pinchsec.config import Scenario, make_config, random_feasible_layout

NOISE_W = 1e-12          # -90 dBm
POWER_W = 1e-5           # -20 dBm


def small_config(M=4, N=2, G=1, Q=200, D_x=10.0, P_t=POWER_W):
    return make_config(f_c=28e9, h=3.0, D_x=D_x, D_y=10.0, M=M, N=N, Q=Q, P_t=P_t, G=G)


def random_scenario(rng, K=2, L=2, G=1, D_x=10.0, D_y=10.0):
    def drop(n):
        return np.column_stack([rng.uniform(0, D_x, n), rng.uniform(0, D_y, n), np.zeros(n)])

    return Scenario(
        bob_pos=drop(K), bob_group=np.arange(K) % G, bob_noise=np.full(K, NOISE_W),
        eve_pos=drop(L), eve_noise=np.full(L, NOISE_W), G=G,
    )


def random_instance(seed, K=2, L=2, G=1, **cfg_kwargs):
    """(cfg, scenario, layout) triple drawn deterministically from `seed`."""
    rng = np.random.default_rng(seed)
    cfg = small_config(G=G, **cfg_kwargs)
    scenario = random_scenario(rng, K=K, L=L, G=G, D_x=cfg.D_x, D_y=cfg.D_y)
    layout = random_feasible_layout(cfg, rng)
    return cfg, scenario, layout


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
