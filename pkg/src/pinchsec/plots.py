"""Figure rendering for experiment outputs; writes PNG files next to the CSVs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_XLABELS = {
    "power_dbm": "Transmit power (dBm)",
    "d_x_m": "Region length D_x (m)",
    "d_y_m": "Region width D_y (m)",
    "waveguides": "Number of waveguides",
    "pas_per_waveguide": "PAs per waveguide",
    "bobs": "Number of users",
    "eves": "Number of eavesdroppers",
    "iteration": "Iteration",
}


def render_aggregate(agg_rows: list, figure: str, path: str) -> None:
    """Line plot of mean secrecy rate against the sweep variable, one line per
    (system, method) pair."""
    series = {}
    sweep_name = "iteration"
    for r in agg_rows:
        sweep_name = r["sweep_name"]
        key = f"{r['system']}/{r['method']}"
        series.setdefault(key, []).append((float(r["sweep_value"]), r["mean_min_rate_bps_hz"]))

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for key in sorted(series):
        pts = sorted(series[key])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=key)
    ax.set_xlabel(_XLABELS.get(sweep_name, sweep_name))
    ax.set_ylabel("Secrecy multicast rate (bits/s/Hz)")
    ax.set_title(figure.replace("_", " "))
    ax.grid(True, alpha=0.4)
    if series:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trace(trace: list, path: str) -> None:
    """Convergence plot of one optimization run's rate trace."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot([r[0] for r in trace], [r[1] for r in trace], marker="o")
    ax.set_xlabel("Iteration")
    ax.set_ylabel("Secrecy multicast rate (bits/s/Hz)")
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
