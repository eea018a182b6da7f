"""Experiment orchestration: scenario generation, Monte-Carlo sweeps, CSV and
figure emission, and run manifests."""

from __future__ import annotations

import csv
import json
import os
import platform
import subprocess
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from . import __version__
from .baselines import baseline_optimize
from .config import Scenario, SystemConfig, dbm_to_watt, make_config
from .multigroup import ao_multigroup
from .pinch_single import ao_single_group

SCHEMA_VERSION = 1

CSV_COLUMNS = ["schema_version", "figure", "system", "method", "sweep_name",
               "sweep_value", "trial", "seed", "min_rate_bps_hz", "iters",
               "wall_ms", "status"]

FIGURE_FAMILIES = ("convergence", "rate_vs_power", "rate_vs_region",
                   "rate_vs_array", "rate_vs_users")

SINGLE_GROUP_METHODS = ("sdr", "dinkelbach_admm")
MULTI_GROUP_METHODS = ("mm_sdr", "socp")
SYSTEMS = ("pass", "conventional", "massive")

DEFAULT_FIXED = {
    "f_c_hz": 28e9,
    "height_m": 3.0,
    "d_x_m": 10.0,
    "d_y_m": 10.0,
    "waveguides": 4,
    "pas_per_waveguide": 2,
    "grid_points": 200,
    "groups": 1,
    "bobs": 2,
    "eves": 2,
    "power_dbm": -20.0,
    "noise_dbm": -90.0,
}


@dataclass
class ExperimentSpec:
    """One figure-family sweep: what to vary, what to hold fixed, how often."""

    figure: str
    sweep_name: str
    sweep_values: list
    fixed: dict = field(default_factory=dict)
    trials: int = 20
    seed: int = 0
    methods: list = field(default_factory=lambda: ["sdr"])
    systems: list = field(default_factory=lambda: ["pass"])
    schema_version: int = SCHEMA_VERSION

    def params(self, sweep_value) -> dict:
        p = dict(DEFAULT_FIXED)
        p.update(self.fixed)
        if self.sweep_name != "iteration":
            p[self.sweep_name] = sweep_value
        return p

    def validate(self) -> list:
        problems = []
        if self.figure not in FIGURE_FAMILIES:
            problems.append(f"unknown figure family {self.figure!r}")
        if self.trials < 1:
            problems.append("trials must be >= 1")
        if not self.sweep_values:
            problems.append("sweep_values is empty")
        groups = dict(DEFAULT_FIXED, **self.fixed).get("groups", 1)
        valid = SINGLE_GROUP_METHODS if groups == 1 else MULTI_GROUP_METHODS
        for m in self.methods:
            if m not in valid:
                problems.append(f"method {m!r} invalid for groups={groups}")
        for s in self.systems:
            if s not in SYSTEMS:
                problems.append(f"unknown system {s!r}")
        return problems


def load_experiment_spec(path: str) -> ExperimentSpec:
    with open(path) as f:
        raw = yaml.safe_load(f)
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {raw.get('schema_version')}")
    sweep = raw.get("sweep", {})
    spec = ExperimentSpec(
        figure=raw["figure"],
        sweep_name=sweep.get("name", "iteration"),
        sweep_values=list(sweep.get("values", [0])),
        fixed=dict(raw.get("fixed", {})),
        trials=int(raw.get("trials", 20)),
        seed=int(raw.get("seed", 0)),
        methods=list(raw.get("methods", ["sdr"])),
        systems=list(raw.get("systems", ["pass"])),
    )
    problems = spec.validate()
    if problems:
        raise ValueError("invalid experiment spec: " + "; ".join(problems))
    return spec


def config_from_params(params: dict) -> SystemConfig:
    return make_config(
        f_c=float(params["f_c_hz"]),
        h=float(params["height_m"]),
        D_x=float(params["d_x_m"]),
        D_y=float(params["d_y_m"]),
        M=int(params["waveguides"]),
        N=int(params["pas_per_waveguide"]),
        Q=int(params["grid_points"]),
        P_t=dbm_to_watt(float(params["power_dbm"])),
        G=int(params["groups"]),
    )


def generate_scenario(params: dict, seed: int, trial: int) -> Scenario:
    """Uniform receiver drops in the service region with a balanced random
    group split; deterministic per (seed, trial)."""
    rng = np.random.default_rng([int(seed), int(trial)])
    K, L, G = int(params["bobs"]), int(params["eves"]), int(params["groups"])
    D_x, D_y = float(params["d_x_m"]), float(params["d_y_m"])
    noise = dbm_to_watt(float(params["noise_dbm"]))

    def drop(n):
        return np.column_stack([rng.uniform(0.0, D_x, n), rng.uniform(0.0, D_y, n), np.zeros(n)])

    bob_pos = drop(K)
    eve_pos = drop(L)
    bob_group = np.empty(K, dtype=int)
    bob_group[rng.permutation(K)] = np.arange(K) % G
    return Scenario(bob_pos=bob_pos, bob_group=bob_group, bob_noise=np.full(K, noise),
                    eve_pos=eve_pos, eve_noise=np.full(L, noise), G=G)


def default_method(system: str, groups: int) -> str:
    return "dinkelbach_admm" if groups == 1 else "mm_sdr"


def optimize_scenario(system: str, method: str, scenario: Scenario, cfg: SystemConfig,
                      seed: int = 0, eps: float = 1e-3):
    """Run one (system, method) optimization on an explicit scenario.

    Returns (result object, min_rate, iterations, trace); the trace is the
    per-iteration rate history ([] for baselines, which have no pinching step).
    """
    if system == "pass":
        if cfg.G == 1:
            res = ao_single_group(scenario, cfg, txbf_method=method, seed=seed, eps=eps)
        else:
            res = ao_multigroup(scenario, cfg, txbf_method=method, seed=seed, eps=eps)
        return res, res.report.min_rate, res.iterations, [(r[0], r[1]) for r in res.trace]
    res = baseline_optimize(system, scenario, cfg, txbf_method=method, seed=seed, eps=eps)
    return res, res.rate, res.iterations, []


def solve_instance(system: str, method: str, params: dict, seed: int, trial: int):
    """Run one (system, method) optimization on the (seed, trial) scenario."""
    cfg = config_from_params(params)
    scenario = generate_scenario(params, seed, trial)
    tag = zlib.crc32((system + "/" + method).encode())
    run_seed = int(np.random.default_rng([int(seed), int(trial), tag]).integers(2**31))
    _, rate, iters, trace = optimize_scenario(system, method, scenario, cfg, seed=run_seed)
    return rate, iters, trace


def load_scenario_file(path: str):
    """Read a scenario YAML file; returns (params, Scenario, layout x or None)."""
    with open(path) as f:
        raw = yaml.safe_load(f)
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {raw.get('schema_version')}")
    params = dict(DEFAULT_FIXED)
    params.update(raw.get("config", {}))
    bobs = np.array(raw["bobs"], dtype=float).reshape(-1, 3)
    eves = np.array(raw.get("eves", []), dtype=float).reshape(-1, 3)
    groups = raw.get("bob_groups", [0] * len(bobs))
    noise = dbm_to_watt(float(params["noise_dbm"]))
    params["bobs"], params["eves"] = len(bobs), len(eves)
    scenario = Scenario(
        bob_pos=bobs, bob_group=np.array(groups, dtype=int),
        bob_noise=np.full(len(bobs), noise),
        eve_pos=eves, eve_noise=np.full(len(eves), noise),
        G=int(params["groups"]),
    )
    layout_x = None
    if "layout" in raw and raw["layout"]:
        layout_x = np.array(raw["layout"]["x"], dtype=float)
    return params, scenario, layout_x


def _run_row(task: dict) -> list:
    """Worker body: one optimization run mapped to CSV row(s)."""
    spec_figure = task["figure"]
    t0 = time.perf_counter()
    try:
        rate, iters, trace = solve_instance(task["system"], task["method"],
                                            task["params"], task["seed"], task["trial"])
        status = "ok"
    except Exception as exc:            # partial failures become rows, not crashes
        rate, iters, trace, status = float("nan"), 0, [], f"error:{type(exc).__name__}"
    wall_ms = 1000.0 * (time.perf_counter() - t0)
    base = dict(schema_version=SCHEMA_VERSION, figure=spec_figure,
                system=task["system"], method=task["method"], trial=task["trial"],
                seed=task["seed"], iters=iters, wall_ms=round(wall_ms, 3), status=status)
    if task["sweep_name"] == "iteration":
        rows = []
        for i, r in trace or [(0, rate)]:
            rows.append(dict(base, sweep_name="iteration", sweep_value=i,
                             min_rate_bps_hz=r))
        return rows or [dict(base, sweep_name="iteration", sweep_value=0,
                             min_rate_bps_hz=rate)]
    return [dict(base, sweep_name=task["sweep_name"], sweep_value=task["sweep_value"],
                 min_rate_bps_hz=rate)]


def worker_count() -> int:
    cap = os.environ.get("PASS_SECMCAST_THREADS")
    if cap:
        return max(1, int(cap))
    return max(1, min(os.cpu_count() or 1, 4))


def _git_identifier() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0:
            return out.stdout.strip()
    except Exception:
        pass
    return "unknown"


def scenario_to_dict(scenario: Scenario, params: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": {k: params[k] for k in DEFAULT_FIXED if k not in ("bobs", "eves")},
        "bobs": [[float(v) for v in p] for p in scenario.bob_pos],
        "bob_groups": [int(g) for g in scenario.bob_group],
        "eves": [[float(v) for v in p] for p in scenario.eve_pos],
    }


def run_experiment(spec: ExperimentSpec, out_dir: str) -> dict:
    """Execute the sweep and write results.csv, aggregate.csv, per-trial
    scenario files, a rendered figure, and the run manifest.

    Returns the manifest dict. Rows are ordered by (sweep value, system,
    method, trial) regardless of worker completion order.
    """
    os.makedirs(out_dir, exist_ok=True)
    t_start = time.perf_counter()
    tasks = []
    for sv in spec.sweep_values:
        params = spec.params(sv)
        for system in spec.systems:
            for method in spec.methods:
                for trial in range(spec.trials):
                    tasks.append(dict(figure=spec.figure, sweep_name=spec.sweep_name,
                                      sweep_value=sv, params=params, system=system,
                                      method=method, seed=spec.seed, trial=trial))

    workers = worker_count()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            row_groups = list(pool.map(_run_row, tasks))
    else:
        row_groups = [_run_row(t) for t in tasks]
    rows = [r for group in row_groups for r in group]

    def num(v):
        try:
            return float(v)
        except (TypeError, ValueError):
            return 0.0

    if spec.sweep_name == "iteration":
        rows.sort(key=lambda r: (r["system"], r["method"], r["trial"], num(r["sweep_value"])))
    else:
        rows.sort(key=lambda r: (num(r["sweep_value"]), r["system"], r["method"], r["trial"]))
    t_solve = time.perf_counter()

    results_path = os.path.join(out_dir, "results.csv")
    with open(results_path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)

    agg = aggregate_rows(rows)
    agg_path = os.path.join(out_dir, "aggregate.csv")
    agg_cols = ["schema_version", "figure", "system", "method", "sweep_name",
                "sweep_value", "trials", "mean_min_rate_bps_hz"]
    with open(agg_path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=agg_cols)
        writer.writeheader()
        writer.writerows(agg)

    scen_dir = os.path.join(out_dir, "scenarios")
    os.makedirs(scen_dir, exist_ok=True)
    for sv in spec.sweep_values:
        params = spec.params(sv)
        for trial in range(spec.trials):
            scenario = generate_scenario(params, spec.seed, trial)
            name = f"sweep_{sv}_trial_{trial}.yaml".replace(" ", "")
            with open(os.path.join(scen_dir, name), "w") as f:
                yaml.safe_dump(scenario_to_dict(scenario, params), f, sort_keys=True)

    from .plots import render_aggregate
    fig_path = os.path.join(out_dir, f"{spec.figure}.png")
    render_aggregate(agg, spec.figure, fig_path)
    t_emit = time.perf_counter()

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "spec": asdict(spec),
        "seed": spec.seed,
        "package_version": __version__,
        "build_id": _git_identifier(),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "workers": workers,
        "wall_s": {"solve": round(t_solve - t_start, 3),
                   "emit": round(t_emit - t_solve, 3)},
        "outputs": {"results": results_path, "aggregate": agg_path, "figure": fig_path},
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
    return manifest


def aggregate_rows(rows: list) -> list:
    """Mean rate over ok trials per (figure, system, method, sweep point)."""
    groups = {}
    for r in rows:
        key = (r["figure"], r["system"], r["method"], r["sweep_name"], r["sweep_value"])
        groups.setdefault(key, []).append(r)
    def sweep_key(v):
        try:
            return (0, float(v), "")
        except (TypeError, ValueError):
            return (1, 0.0, str(v))

    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3], sweep_key(k[4]))):
        members = [r for r in groups[key] if r["status"] == "ok"]
        rates = [r["min_rate_bps_hz"] for r in members]
        out.append({
            "schema_version": SCHEMA_VERSION,
            "figure": key[0], "system": key[1], "method": key[2],
            "sweep_name": key[3], "sweep_value": key[4],
            "trials": len(members),
            "mean_min_rate_bps_hz": float(np.mean(rates)) if rates else float("nan"),
        })
    return out
