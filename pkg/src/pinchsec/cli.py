"""Command line interface: solve one scenario, run experiment sweeps, lint
scenario files, and dump convergence traces."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from .config import PinchingLayout, validate_layout, waveguide_y_coords
from .harness import (SCHEMA_VERSION, config_from_params, default_method,
                      load_experiment_spec, load_scenario_file, optimize_scenario,
                      run_experiment)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def _write_report(out, system, method, cfg, scenario, result, rate, iters):
    w = out.write
    w(f"schema_version: {SCHEMA_VERSION}\n")
    w(f"system: {system}\nmethod: {method}\n")
    w(f"waveguides: {cfg.M}\npas_per_waveguide: {cfg.N}\ngroups: {cfg.G}\n")
    w(f"power_w: {_fmt(cfg.P_t)}\n")
    w(f"bobs: {scenario.K}\neves: {scenario.L}\n")
    w(f"iterations: {iters}\n")
    w(f"min_rate_bps_hz: {_fmt(rate)}\n")
    report = result.report
    for g in range(scenario.G):
        w(f"group_{g}_rate_bps_hz: {_fmt(report.group_rate[g])}\n")
        w(f"group_{g}_bob_sinr: {' '.join(_fmt(v) for v in report.bob_sinr[g])}\n")
        if scenario.L:
            w(f"group_{g}_eve_sinr: {' '.join(_fmt(v) for v in report.eve_sinr[g])}\n")
    layout = getattr(result, "layout", None)
    if layout is not None:
        for m in range(layout.x.shape[0]):
            w(f"layout_x_{m}: {' '.join(_fmt(v) for v in layout.x[m])}\n")


def cmd_solve(args) -> int:
    params, scenario, _ = load_scenario_file(args.scenario)
    if args.power_dbm is not None:
        params["power_dbm"] = args.power_dbm
    cfg = config_from_params(params)
    method = args.method or default_method(args.system, cfg.G)
    result, rate, iters, trace = optimize_scenario(
        args.system, method, scenario, cfg, seed=args.seed, eps=args.tol)

    buf = io.StringIO()
    _write_report(buf, args.system, method, cfg, scenario, result, rate, iters)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "report.txt"), "w") as f:
            f.write(buf.getvalue())
        with open(os.path.join(args.out_dir, "trace.csv"), "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["iteration", "min_rate_bps_hz"])
            writer.writerows([(i, _fmt(r)) for i, r in trace])
        if trace:
            from .plots import render_trace
            render_trace(trace, os.path.join(args.out_dir, "convergence.png"))
    sys.stdout.write(buf.getvalue())
    return 0


def cmd_experiment(args) -> int:
    spec = load_experiment_spec(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    if args.trials is not None:
        spec.trials = args.trials
    if args.method:
        spec.methods = [args.method]
    if args.system:
        spec.systems = [args.system]
    if args.power_dbm is not None:
        spec.fixed["power_dbm"] = args.power_dbm
    problems = spec.validate()
    if problems:
        raise ValueError("invalid experiment spec: " + "; ".join(problems))
    manifest = run_experiment(spec, args.out_dir)
    print(json.dumps({"ok": True, "outputs": manifest["outputs"]}))
    return 0


def cmd_validate(args) -> int:
    params, scenario, layout_x = load_scenario_file(args.scenario)
    cfg = config_from_params(params)
    problems = list(scenario.check_positions(cfg))
    if scenario.G > max(1, scenario.K):
        problems.append("more groups than users")
    if layout_x is not None:
        layout = PinchingLayout(x=layout_x, y=waveguide_y_coords(cfg), h=cfg.h)
        problems.extend(validate_layout(layout, cfg))
    if problems:
        for p in problems:
            print(p)
        return 1
    print("ok")
    return 0


def cmd_trace(args) -> int:
    params, scenario, _ = load_scenario_file(args.scenario)
    if args.power_dbm is not None:
        params["power_dbm"] = args.power_dbm
    cfg = config_from_params(params)
    method = args.method or default_method(args.system, cfg.G)
    _, rate, iters, trace = optimize_scenario(
        args.system, method, scenario, cfg, seed=args.seed, eps=args.tol)
    writer = csv.writer(sys.stdout)
    writer.writerow(["iteration", "min_rate_bps_hz"])
    writer.writerows([(i, _fmt(r)) for i, r in trace])
    return 0


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", default=None)
    p.add_argument("--system", default="pass", choices=["pass", "conventional", "massive"])
    p.add_argument("--power-dbm", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinchsec",
        description="Secure multicast beamforming for pinching-antenna systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimize one scenario file and print a report")
    p.add_argument("scenario")
    _add_common(p)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="run a sweep spec to CSVs and a figure")
    p.add_argument("spec")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--method", default=None)
    p.add_argument("--system", default=None, choices=["pass", "conventional", "massive"])
    p.add_argument("--power-dbm", type=float, default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("validate", help="lint a scenario (and optional layout) file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("trace", help="dump the convergence trace of one run")
    p.add_argument("scenario")
    _add_common(p)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        sys.stderr.write(json.dumps({"error": f"{type(exc).__name__}: {exc}"}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
