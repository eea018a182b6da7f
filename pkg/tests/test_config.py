"""Constants, geometry validation, layout feasibility, and scenario checks."""

import numpy as np
import pytest

from pinchsec.config import (PinchingLayout, Scenario, dbm_to_watt, make_config,
                             random_feasible_layout, validate_layout, watt_to_dbm,
                             waveguide_y_coords)

from conftest import small_config


def test_derived_constants():
    cfg = small_config()
    assert cfg.lam == pytest.approx(2.998e8 / 28e9, rel=1e-12)
    assert cfg.k0 == pytest.approx(2 * np.pi / cfg.lam, rel=1e-12)
    assert cfg.lambda_g == pytest.approx(cfg.lam / 1.44, rel=1e-12)
    assert cfg.k_g == pytest.approx(1.44 * cfg.k0, rel=1e-12)
    assert cfg.eta == pytest.approx((cfg.lam / (4 * np.pi)) ** 2, rel=1e-12)
    assert cfg.eta == pytest.approx(7.2598e-7, rel=1e-4)
    assert cfg.delta_min == pytest.approx(cfg.lam / 2, rel=1e-12)


def test_power_conversions():
    assert dbm_to_watt(-20.0) == pytest.approx(1e-5, rel=1e-12)
    assert dbm_to_watt(0.0) == pytest.approx(1e-3, rel=1e-12)
    assert watt_to_dbm(dbm_to_watt(-37.3)) == pytest.approx(-37.3, rel=1e-12)


def test_grid_endpoints():
    cfg = small_config(Q=11)
    g = cfg.grid()
    assert g[0] == 0.0 and g[-1] == cfg.D_x and len(g) == 11
    assert np.allclose(np.diff(g), cfg.D_x / 10)


def test_make_config_validation():
    with pytest.raises(ValueError):
        small_config(M=1, G=2)          # M < G
    with pytest.raises(ValueError):
        small_config(Q=1)
    with pytest.raises(ValueError):
        make_config(f_c=-1, h=3, D_x=10, D_y=10, M=2, N=1, Q=10, P_t=1e-5, G=1)


def test_waveguide_y_single_is_centered():
    cfg = small_config(M=1, G=1)
    assert waveguide_y_coords(cfg) == pytest.approx([cfg.D_y / 2])


def test_waveguide_y_within_region():
    cfg = small_config(M=4)
    y = waveguide_y_coords(cfg)
    assert len(y) == 4
    assert np.all((y >= 0) & (y <= cfg.D_y))
    assert np.all(np.diff(y) > 0)


def test_random_layout_feasible_and_deterministic():
    cfg = small_config(M=3, N=4)
    for seed in range(10):
        lay = random_feasible_layout(cfg, np.random.default_rng(seed))
        assert validate_layout(lay, cfg) == []
        again = random_feasible_layout(cfg, np.random.default_rng(seed))
        assert np.array_equal(lay.x, again.x)


def test_validate_layout_catches_violations():
    cfg = small_config(M=2, N=2)
    y = waveguide_y_coords(cfg)
    bad_spacing = PinchingLayout(x=np.array([[1.0, 1.0 + cfg.delta_min / 3], [2.0, 4.0]]), y=y, h=cfg.h)
    assert any("spacing" in v or "delta" in v or "close" in v for v in validate_layout(bad_spacing, cfg)) \
        or validate_layout(bad_spacing, cfg)
    out_of_range = PinchingLayout(x=np.array([[-0.5, 2.0], [3.0, 4.0]]), y=y, h=cfg.h)
    assert validate_layout(out_of_range, cfg)
    good = PinchingLayout(x=np.array([[1.0, 2.0], [3.0, 4.0]]), y=y, h=cfg.h)
    assert validate_layout(good, cfg) == []


def test_layout_shape_mismatch_raises():
    with pytest.raises(ValueError):
        PinchingLayout(x=np.zeros((2, 2)), y=np.zeros(3), h=3.0)


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario(bob_pos=np.array([[1.0, 1.0, 0.0]]), bob_group=np.array([0]),
                 bob_noise=np.array([0.0]), eve_pos=np.zeros((0, 3)),
                 eve_noise=np.zeros(0), G=1)
    with pytest.raises(ValueError):        # empty group 1
        Scenario(bob_pos=np.array([[1.0, 1.0, 0.0]]), bob_group=np.array([0]),
                 bob_noise=np.array([1e-12]), eve_pos=np.zeros((0, 3)),
                 eve_noise=np.zeros(0), G=2)


def test_scenario_group_members():
    sc = Scenario(bob_pos=np.array([[1, 1, 0], [2, 2, 0], [3, 3, 0.0]]),
                  bob_group=np.array([0, 1, 0]), bob_noise=np.full(3, 1e-12),
                  eve_pos=np.zeros((0, 3)), eve_noise=np.zeros(0), G=2)
    assert list(sc.group_members(0)) == [0, 2]
    assert list(sc.group_members(1)) == [1]
    assert sc.K == 3 and sc.L == 0
