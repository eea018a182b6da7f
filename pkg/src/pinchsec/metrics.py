"""SINRs, per-user secrecy rates, group secrecy multicast rates, and the min-rate objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .config import Scenario


@dataclass(frozen=True)
class SecrecyReport:
    """Per-user SINRs and secrecy rates; all rates in bits/s/Hz.

    eve_sinr[g][l] is Eve l's SINR when decoding group g's message.
    group_rate[g] = min over the group's users; min_rate = min over groups.
    """

    bob_sinr: list        # per group: array over the group's users
    eve_sinr: list        # per group: array over Eves (length L)
    per_user_secrecy: list
    group_rate: np.ndarray
    min_rate: float


def bob_sinr(channels: ChannelSet, ws: list[np.ndarray], g: int, k: int, noise: float) -> float:
    """SINR of Bob k (global index) for its group-g message."""
    h = channels.bobs[k]
    sig = abs(h @ ws[g]) ** 2
    interf = sum(abs(h @ ws[i]) ** 2 for i in range(len(ws)) if i != g)
    return sig / (interf + noise)


def eve_sinr(channels: ChannelSet, ws: list[np.ndarray], g: int, l: int, noise: float) -> float:
    """Worst-case leakage SINR of Eve l when decoding the group-g message."""
    h = channels.eves[l]
    sig = abs(h @ ws[g]) ** 2
    interf = sum(abs(h @ ws[i]) ** 2 for i in range(len(ws)) if i != g)
    return sig / (interf + noise)


def secrecy_report(channels: ChannelSet, ws: list[np.ndarray], scenario: Scenario) -> SecrecyReport:
    """Exact secrecy multicast rates for beamformers {w_g}.

    Per-user rate is [log2(1+SINR_bob) - max_l log2(1+SINR_eve)]^+; with no Eves
    the leakage term is zero and the secrecy rate equals the multicast rate.
    """
    G = scenario.G
    bob_s, eve_s, per_user, group_rate = [], [], [], np.empty(G)
    for g in range(G):
        members = scenario.group_members(g)
        bs = np.array([bob_sinr(channels, ws, g, int(k), scenario.bob_noise[k]) for k in members])
        es = np.array([eve_sinr(channels, ws, g, l, scenario.eve_noise[l]) for l in range(scenario.L)])
        leak = np.max(np.log2(1.0 + es)) if es.size else 0.0
        ps = np.maximum(np.log2(1.0 + bs) - leak, 0.0)
        bob_s.append(bs)
        eve_s.append(es)
        per_user.append(ps)
        group_rate[g] = ps.min()
    return SecrecyReport(
        bob_sinr=bob_s, eve_sinr=eve_s, per_user_secrecy=per_user,
        group_rate=group_rate, min_rate=float(group_rate.min()),
    )


def min_rate(channels: ChannelSet, ws: list[np.ndarray], scenario: Scenario) -> float:
    return secrecy_report(channels, ws, scenario).min_rate


def covariance_sinrs(channels: ChannelSet, Ws: list[np.ndarray], scenario: Scenario):
    """SINRs in covariance form, Tr(H W_g) / (Tr(H W^{g-}) + sigma^2).

    Coincides with the rank-one SINRs when W_g = w_g w_g^H. Returns
    (bob_sinr (K,), eve_sinr (G, L)).
    """
    G = scenario.G
    # signal/interference powers Tr(conj(h) h^T W) = h^T W conj(h)
    pb = np.array([[np.real(h @ W @ h.conj()) for W in Ws] for h in channels.bobs])  # (K, G)
    pe = np.array([[np.real(h @ W @ h.conj()) for W in Ws] for h in channels.eves])  # (L, G)
    bob = np.empty(scenario.K)
    for k in range(scenario.K):
        g = int(scenario.bob_group[k])
        bob[k] = pb[k, g] / (pb[k].sum() - pb[k, g] + scenario.bob_noise[k])
    eve = np.empty((G, scenario.L))
    for g in range(G):
        for l in range(scenario.L):
            eve[g, l] = pe[l, g] / (pe[l].sum() - pe[l, g] + scenario.eve_noise[l])
    return bob, eve


def covariance_min_rate(channels: ChannelSet, Ws: list[np.ndarray], scenario: Scenario) -> float:
    """Min-over-groups secrecy multicast rate evaluated on covariances {W_g}."""
    bob, eve = covariance_sinrs(channels, Ws, scenario)
    rates = np.empty(scenario.G)
    for g in range(scenario.G):
        members = scenario.group_members(g)
        leak = np.max(np.log2(1.0 + eve[g])) if scenario.L else 0.0
        rates[g] = max(np.min(np.log2(1.0 + bob[members])) - leak, 0.0)
    return float(rates.min())
