"""Multi-group machinery: DoC decomposition against the SINR definitions, MM
surrogate tightness and lower-bound property, both transmit updates, the
pinching grid update, and the alternating driver."""

import numpy as np
import pytest

from pinchsec.channel import scenario_channels
from pinchsec.config import validate_layout
from pinchsec.metrics import covariance_min_rate, covariance_sinrs
from pinchsec.multigroup import (PinchSurrogate, SocpBounds, achieved_bounds,
                                 _random_covariances, ao_multigroup, doc_objective,
                                 doc_rate_terms, mm_pinch_update, mm_sdr_txbf_update,
                                 socp_txbf_update)
from pinchsec.txbf_single import sdr_single_group

from conftest import random_instance


def instance(seed, G=2, K=4, L=2, M=4, **kw):
    cfg, sc, layout = random_instance(seed, K=K, L=L, G=G, M=M, **kw)
    ch = scenario_channels(layout, sc, cfg)
    rng = np.random.default_rng(seed + 500)
    Ws = _random_covariances(G, M, cfg.P_t, rng)
    return cfg, sc, layout, ch, Ws


def unclamped_min_rate(ch, Ws, sc):
    """Independent re-derivation from the SINRs, without the [.]^+ clamp."""
    bob, eve = covariance_sinrs(ch, Ws, sc)
    vals = []
    for g in range(sc.G):
        members = sc.group_members(g)
        rb = np.log2(1 + bob[members]).min()
        re = np.log2(1 + eve[g]).max() if sc.L else 0.0
        vals.append(rb - re)
    return min(vals)


def test_doc_zero_covariance_is_zero():
    cfg, sc, _, ch, _ = instance(0)
    Ws = [np.zeros((4, 4), dtype=complex) for _ in range(2)]
    assert doc_objective(Ws, ch, sc) == pytest.approx(0.0, abs=1e-12)


def test_doc_matches_unclamped_rate():
    for seed in range(5):
        cfg, sc, _, ch, Ws = instance(seed)
        got = doc_objective(Ws, ch, sc)
        assert got == pytest.approx(unclamped_min_rate(ch, Ws, sc), rel=1e-9)
        # clamped exact rate dominates the DoC value
        assert covariance_min_rate(ch, Ws, sc) >= got - 1e-12


def test_doc_terms_shapes_and_leakage_sign():
    cfg, sc, _, ch, Ws = instance(1, L=3)
    F1, J1, F2, J2 = doc_rate_terms(Ws, ch, sc)
    assert F1.shape == (2, 4) and J1.shape == (2, 4)
    assert F2.shape == (2, 3) and J2.shape == (3,)
    assert np.all(F1 >= J1 - 1e-12)   # adding the own-group term never hurts
    assert np.all(F2 <= J2[None, :] + 1e-12)


def test_mm_sdr_improves_doc_and_respects_budget():
    for seed in range(3):
        cfg, sc, _, ch, Ws = instance(seed)
        before = doc_objective(Ws, ch, sc)
        Ws_new, t = mm_sdr_txbf_update(Ws, ch, sc, cfg.P_t, max_iters=400)
        after = doc_objective(Ws_new, ch, sc)
        # MM surrogate value lower-bounds the true objective at the new point
        assert after >= t - 1e-8
        assert after >= before - 1e-9
        tr = sum(float(np.real(np.trace(W))) for W in Ws_new)
        assert tr <= cfg.P_t * (1 + 1e-9)
        for W in Ws_new:
            assert np.linalg.eigvalsh(0.5 * (W + W.conj().T)).min() >= -1e-12


def test_mm_sdr_matches_single_group_sdr():
    # with one group the covariance update should be competitive with the SDR's
    # extracted beamformer and stay below the relaxation bound
    for seed in range(3):
        cfg, sc, _, ch, _ = instance(seed, G=1, K=2, L=2)
        rng = np.random.default_rng(seed)
        Ws = _random_covariances(1, 4, cfg.P_t, rng)
        for _ in range(8):
            Ws, _ = mm_sdr_txbf_update(Ws, ch, sc, cfg.P_t, max_iters=800)
        got = covariance_min_rate(ch, Ws, sc)
        sdr = sdr_single_group(ch, sc, cfg.P_t, seed=seed)
        assert got <= sdr.upper_bound_rate + 1e-6
        assert got >= 0.9 * sdr.rate - 1e-9


def test_socp_update_never_worse_and_feasible():
    for seed in range(3):
        cfg, sc, _, ch, Ws = instance(seed)
        rng = np.random.default_rng(seed + 2)
        ws = []
        for W in Ws:
            lam, V = np.linalg.eigh(W)
            ws.append(V[:, -1] * np.sqrt(max(lam[-1], 0.0)))
        before = covariance_min_rate(ch, [np.outer(w, w.conj()) for w in ws], sc)
        ws_new, bounds = socp_txbf_update(ws, None, ch, sc, cfg.P_t)
        after = covariance_min_rate(ch, [np.outer(w, w.conj()) for w in ws_new], sc)
        assert after >= before - 1e-6
        power = sum(np.linalg.norm(w) ** 2 for w in ws_new)
        assert power <= cfg.P_t * (1 + 1e-6)
        assert bounds.xi_b.shape == (sc.K,) and bounds.xi_e.shape == (sc.G, sc.L)


def test_achieved_bounds_consistent():
    cfg, sc, _, ch, Ws = instance(2)
    ws = []
    for W in Ws:
        lam, V = np.linalg.eigh(W)
        ws.append(V[:, -1] * np.sqrt(max(lam[-1], 0.0)))
    b = achieved_bounds(ws, ch, sc)
    # the slack equals the unclamped min rate implied by the SINRs
    assert b.t == pytest.approx(unclamped_min_rate(ch, [np.outer(w, w.conj()) for w in ws], sc), rel=1e-10)


def test_pinch_powers_match_full_channel_rebuild():
    cfg, sc, layout, ch, Ws = instance(3)
    surr = PinchSurrogate(layout, Ws, sc, cfg)
    cand = np.array([1.3, 4.7, 8.1])
    for m, n in [(0, 0), (3, 1)]:
        q = surr.powers_on_grid(m, n, cand)
        for c, xc in enumerate(cand):
            lay = layout.replace_element(m, n, xc)
            ch2 = scenario_channels(lay, sc, cfg)
            H = np.vstack([ch2.bobs, ch2.eves])
            want = np.real(np.einsum("rm,gmn,rn->rg", H, np.array(surr.Ws), H.conj()))
            assert np.allclose(q[:, :, c], np.maximum(want, 0.0), rtol=1e-8, atol=1e-30)


def test_pinch_exact_rate_matches_metrics():
    cfg, sc, layout, ch, Ws = instance(4)
    surr = PinchSurrogate(layout, Ws, sc, cfg)
    q = surr.powers_on_grid(0, 0, np.array([layout.x[0, 0], 2.5]))
    got = surr.exact_rate(q)
    assert got[0] == pytest.approx(covariance_min_rate(ch, Ws, sc), rel=1e-10)
    lay2 = layout.replace_element(0, 0, 2.5)
    want = covariance_min_rate(scenario_channels(lay2, sc, cfg), Ws, sc)
    assert got[1] == pytest.approx(want, rel=1e-10)


def test_pinch_surrogate_tight_and_below():
    cfg, sc, layout, ch, Ws = instance(5)
    surr = PinchSurrogate(layout, Ws, sc, cfg)
    cand = np.linspace(0.2, 9.8, 25)
    q = surr.powers_on_grid(1, 0, cand)
    q_tilde = surr.powers_on_grid(1, 0, np.array([layout.x[1, 0]]))[:, :, 0]
    vals = surr.surrogate(q, q_tilde)
    at_exp = surr.surrogate(q_tilde[:, :, None], q_tilde)[0]
    assert at_exp == pytest.approx(doc_objective(Ws, ch, sc), abs=1e-9)
    # MM lower bound: surrogate never exceeds the unclamped objective
    for c, xc in enumerate(cand):
        lay = layout.replace_element(1, 0, xc)
        ch2 = scenario_channels(lay, sc, cfg)
        assert vals[c] <= unclamped_min_rate(ch2, Ws, sc) + 1e-9


def test_mm_pinch_update_monotone_feasible():
    for seed in range(3):
        cfg, sc, layout, ch, Ws = instance(seed)
        before = covariance_min_rate(ch, Ws, sc)
        lay2 = mm_pinch_update(layout, Ws, sc, cfg)
        after = covariance_min_rate(scenario_channels(lay2, sc, cfg), Ws, sc)
        assert after >= before - 1e-12
        assert validate_layout(lay2, cfg) == []


def test_ao_multigroup_monotone_both_methods():
    for method in ["mm_sdr", "socp"]:
        cfg, sc, layout = random_instance(0, K=4, L=2, G=2)
        res = ao_multigroup(sc, cfg, txbf_method=method, seed=0, max_iters=4,
                            txbf_iters=300)
        rates = [row[1] for row in res.trace]
        assert all(r2 >= r1 - 1e-12 for r1, r2 in zip(rates, rates[1:]))
        assert validate_layout(res.layout, cfg) == []
        assert len(res.ws) == 2
        power = sum(np.linalg.norm(w) ** 2 for w in res.ws)
        assert power <= cfg.P_t * (1 + 1e-6)


def test_ao_multigroup_rejects_unknown_method():
    cfg, sc, _ = random_instance(0, K=4, L=2, G=2)
    with pytest.raises(ValueError):
        ao_multigroup(sc, cfg, txbf_method="nope", seed=0)
