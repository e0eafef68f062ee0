"""Command-line surface: configuration ingestion, experiment orchestration,
seeded reproducibility and persistence.

Exit codes: 0 success, 1 domain failure (validation or numerical), 2
usage/parse errors.  All commands accept a parameter document (TOML or
JSON), validate it first (``--force`` downgrades failures to a warning) and
write CSV artifacts plus a manifest listing every file with its checksum.
Identical config + seed reproduces identical artifacts.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import curves, flowsim, returnmap
from .artifacts import RunWriter, trial_rng
from .errors import EINetError, SchemaError
from .params import ModelParams, params_hash, validate_params

DEFAULT_XI_LADDER = (0.1, 0.05, 0.025, 0.0125)


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="einet",
        description="Excitation-inhibition network flow: simulation and ergodic diagnostics",
    )
    sub = top.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="parameter document (.toml or .json)")
    common.add_argument("--output-dir", default=None,
                        help="artifact directory (default $EINET_OUTPUT_DIR or ./ei-run/<command>)")
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--threads", type=int, default=1,
                        help="parallel independent trials (deterministic merge)")
    common.add_argument("--force", action="store_true",
                        help="run even if the parameter validation fails")

    p = sub.add_parser("check", parents=[common], help="validate assumptions, report margins")
    p.add_argument("--grid", type=int, default=10_000, help="grid points per unit interval")
    p.add_argument("--time-samples", type=int, default=100)

    p = sub.add_parser("simulate", parents=[common], help="continuous trajectory sample")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--dt-out", type=float, default=0.01)

    p = sub.add_parser("raster", parents=[common], help="activation raster of the flow")
    p.add_argument("--t-end", type=float, default=None)

    p = sub.add_parser("lyapunov", parents=[common], help="return-map Lyapunov spectrum")
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--transient", type=int, default=1000)
    p.add_argument("--orbit-rows", type=int, default=2000,
                   help="also record this many raw orbit steps (0 disables)")

    p = sub.add_parser("curve", parents=[common], help="curve pushforward: range growth")
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--value-resolution", type=float, default=1e-3)
    p.add_argument("--snapshot-rows", type=int, default=0,
                   help="also write curve snapshots, downsampled to about this many rows")

    p = sub.add_parser("concentration", parents=[common],
                       help="curve pushforward: sink concentration and pole-mass ladder")
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--value-resolution", type=float, default=1e-3)
    p.add_argument("--xi", type=float, nargs="*", default=None)

    p = sub.add_parser("sync", parents=[common], help="fiber synchronization trials")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("birkhoff", parents=[common], help="orbit averages of the catalog")
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--returns", type=int, default=None)
    p.add_argument("--step-weighted", action="store_true",
                   help="weight by step count instead of flow time")
    return top


def _setting(args, experiment: dict, key: str, default):
    """Resolution order: CLI flag (if given) > [experiment] table > default."""
    cli_val = getattr(args, key, None)
    if cli_val is not None:
        return cli_val
    if key in experiment:
        return experiment[key]
    return default


def _outdir(args) -> Path:
    if args.output_dir:
        return Path(args.output_dir)
    env = os.environ.get("EINET_OUTPUT_DIR")
    if env:
        return Path(env) / args.command
    return Path("ei-run") / args.command


def _load(args):
    from .params import _load_json, _load_toml  # reuse the sniffing readers

    path = Path(args.config)
    if not path.exists():
        raise SchemaError(f"config file not found: {path}")
    raw = path.read_bytes()
    if path.suffix.lower() in (".toml", ".tml"):
        doc = _load_toml(raw)
    elif path.suffix.lower() == ".json":
        doc = _load_json(raw)
    else:
        doc = _load_json(raw) if raw.lstrip().startswith(b"{") else _load_toml(raw)
    from .params import params_from_dict

    params = params_from_dict(doc)
    experiment = doc.get("experiment", {})
    return params, experiment


def _checked_params(args) -> tuple[ModelParams, dict]:
    params, experiment = _load(args)
    report = validate_params(params)
    if not report.passed:
        if args.force:
            print("warning: validation failed, continuing under --force", file=sys.stderr)
        else:
            print(report.to_json(indent=2))
            raise SystemExit(1)
    return params, experiment


def _start_point(params: ModelParams, seed: int, k: int = 0) -> returnmap.SectionPoint:
    rng = trial_rng(seed, k)
    x, y = rng.random(2)
    return returnmap.SectionPoint(x, y, np.zeros(params.N))


def _summary(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _cmd_check(args) -> int:
    params, _ = _load(args)
    report = validate_params(params, grid_resolution=args.grid,
                             time_samples=args.time_samples)
    doc = report.to_dict()
    doc["params_hash"] = params_hash(params)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0 if report.passed else 1


def _cmd_simulate(args) -> int:
    params, experiment = _checked_params(args)
    t_end = float(_setting(args, experiment, "t_end", 100.0))
    dt_out = float(_setting(args, experiment, "dt_out", 0.01))
    w = RunWriter(_outdir(args), "simulate", params_hash(params), args.seed,
                  {"t_end": t_end, "dt_out": dt_out})
    try:
        p0 = _start_point(params, args.seed)
        s0 = flowsim.FlowState(p0.x, p0.y, 0.0, p0.z)
        ts, ws, zs = flowsim.sample_trajectory(s0, t_end, dt_out, params)
        header = ["t", "w"] + [f"z{i}" for i in range(params.N)]
        w.write_csv("trajectory.csv", header,
                    ((t, wv, *row) for t, wv, row in zip(ts, ws, zs)))
        manifest = w.finish()
    except EINetError as exc:
        w.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _summary({"command": "simulate", "output_dir": str(w.outdir),
              "rows": manifest["files"]["trajectory.csv"]["rows"],
              "params_hash": manifest["params_hash"]})
    return 0


def _cmd_raster(args) -> int:
    params, experiment = _checked_params(args)
    t_end = float(_setting(args, experiment, "t_end", 200.0))
    w = RunWriter(_outdir(args), "raster", params_hash(params), args.seed,
                  {"t_end": t_end})
    try:
        p0 = _start_point(params, args.seed)
        s0 = flowsim.FlowState(p0.x, p0.y, 0.0, p0.z)
        events = flowsim.activation_raster(s0, t_end, params)
        w.write_csv("raster.csv", ["t", "unit"], events)
        manifest = w.finish()
    except EINetError as exc:
        w.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    units = sorted({u for _, u in events})
    _summary({"command": "raster", "output_dir": str(w.outdir),
              "events": len(events), "units_active": len(units),
              "params_hash": manifest["params_hash"]})
    return 0


def _cmd_lyapunov(args) -> int:
    params, experiment = _checked_params(args)
    iters = int(_setting(args, experiment, "iters", 100_000))
    transient = int(_setting(args, experiment, "transient", 1000))
    w = RunWriter(_outdir(args), "lyapunov", params_hash(params), args.seed,
                  {"iters": iters, "transient": transient})
    try:
        p0 = _start_point(params, args.seed)
        result, track = returnmap.lyapunov_spectrum(
            p0, transient, iters, params, seed=args.seed,
            convergence_every=max(1, iters // 200),
        )
        w.write_csv(
            "convergence.csv",
            ["step"] + [f"lambda{i}" for i in range(2 + params.N)],
            ((step, *np.sort(vals)[::-1]) for step, vals in track),
        )
        if args.orbit_rows:
            def orbit_rows():
                q = p0
                for k in range(args.orbit_rows):
                    rec = returnmap.step(q, params)
                    hit = [0] * params.N
                    for unit, _t in rec.activations:
                        hit[unit] = 1
                    yield (k, q.x, q.y, *q.z, rec.tau, *hit)
                    q = rec.next

            w.write_csv(
                "orbit.csv",
                ["step", "x", "y"] + [f"z{i}" for i in range(params.N)]
                + ["tau"] + [f"act{i}" for i in range(params.N)],
                orbit_rows(),
            )
        w.write_json("exponents.json", result.to_dict())
        manifest = w.finish()
    except EINetError as exc:
        w.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _summary({"command": "lyapunov", "output_dir": str(w.outdir),
              "exponents": result.exponents.tolist(),
              "stderr": result.stderr.tolist(),
              "restarts": result.n_restarts,
              "params_hash": manifest["params_hash"]})
    return 0


def _curve_stats_rows(run: curves.CurveRun):
    for st in run.stats:
        for i in range(st.ranges_psi.size):
            yield (st.n, i, st.domain, st.samples,
                   st.ranges_theta[i], st.ranges_psi[i], st.ranges_zeta[i],
                   st.new_jumps[i], st.total_jumps[i], st.min_slope[i],
                   st.cond_min_slope[i], st.frac_outside[i])


_CURVE_HEADER = ["generation", "component", "domain", "samples",
                 "range_theta", "range_psi", "range_zeta", "new_jumps",
                 "total_jumps", "min_slope", "cond_min_slope", "frac_outside"]


def _run_curve_common(args, params, experiment, xi_ladder=()):
    n_gens = int(_setting(args, experiment, "generations", 5))
    a = float(_setting(args, experiment, "a", 1.0))
    rng = trial_rng(args.seed, 0)
    anchor = tuple(rng.random(2))
    return curves.run_curve(
        params, a=a, anchor=anchor, n_gens=n_gens,
        value_resolution=float(getattr(args, "value_resolution", 1e-3)),
        xi_ladder=xi_ladder,
    )


def _cmd_curve(args) -> int:
    params, experiment = _checked_params(args)
    w = RunWriter(_outdir(args), "curve", params_hash(params), args.seed, {})
    try:
        run = _run_curve_common(args, params, experiment)
        w.write_csv("curve_stats.csv", _CURVE_HEADER, _curve_stats_rows(run))
        if args.snapshot_rows:
            g = run.graph
            rows = []
            total = g.sample_count
            stride = max(1, total // max(1, args.snapshot_rows))
            for seg in g.segments:
                u = g.presented_u(seg)[::stride]
                vals = (seg.v - np.floor(seg.v))[::stride]
                rows += [(uu, *vv) for uu, vv in zip(u, vals)]
            w.write_csv("snapshot.csv",
                        ["u"] + [f"z{i}" for i in range(params.N)], rows)
        lam = params.anosov.lam
        r_max = [float(np.log(np.max(st.ranges_psi))) for st in run.stats]
        ns = list(range(len(run.stats)))
        slope = float(np.polyfit(ns, r_max, 1)[0]) if len(ns) > 1 else float("nan")
        w.write_json("stats.json", {
            "lambda": lam, "log_range_slope": slope, "capped": run.capped,
            "generations": len(run.stats),
        })
        manifest = w.finish()
    except EINetError as exc:
        w.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _summary({"command": "curve", "output_dir": str(w.outdir),
              "generations": len(run.stats), "log_range_slope": slope,
              "lambda": lam, "params_hash": manifest["params_hash"]})
    return 0


def _cmd_concentration(args) -> int:
    params, experiment = _checked_params(args)
    ladder = tuple(args.xi) if args.xi else tuple(
        experiment.get("xi_ladder", DEFAULT_XI_LADDER))
    w = RunWriter(_outdir(args), "concentration", params_hash(params), args.seed,
                  {"xi_ladder": list(ladder)})
    try:
        run = _run_curve_common(args, params, experiment, xi_ladder=ladder)
        w.write_csv("curve_stats.csv", _CURVE_HEADER, _curve_stats_rows(run))
        w.write_csv("masses.csv", ["generation", "xi", "mass"],
                    ((st.n, xi, st.mass[j]) for st in run.stats
                     for j, xi in enumerate(ladder)))
        mass_avg = run.mass_matrix().mean(axis=0)
        c3 = [float(m / xi) for m, xi in zip(mass_avg, ladder)]
        eps = [r.epsilon for r in params.rotations]
        w.write_json("stats.json", {
            "xi_ladder": list(ladder), "mass_avg": mass_avg.tolist(),
            "c3_fit": c3, "epsilon": eps,
            "frac_outside_last": run.stats[-1].frac_outside.tolist(),
        })
        manifest = w.finish()
    except EINetError as exc:
        w.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _summary({"command": "concentration", "output_dir": str(w.outdir),
              "c3_fit": c3, "params_hash": manifest["params_hash"]})
    return 0


def _cmd_sync(args) -> int:
    params, experiment = _checked_params(args)
    trials = int(_setting(args, experiment, "trials", 100))
    steps = int(_setting(args, experiment, "steps", 200))
    tol = float(_setting(args, experiment, "tol", 1e-6))
    w = RunWriter(_outdir(args), "sync", params_hash(params), args.seed,
                  {"trials": trials, "steps": steps, "tol": tol})

    def one(k: int):
        rng = trial_rng(args.seed, k)
        base = rng.random(2)
        za, zb = rng.random(params.N), rng.random(params.N)
        return returnmap.sync_test(base, za, zb, steps, params)

    try:
        with ThreadPoolExecutor(max_workers=max(1, args.threads)) as ex:
            series = list(ex.map(one, range(trials)))
        rows = ((t, k, d) for t, s in enumerate(series) for k, d in enumerate(s))
        w.write_csv("sync.csv", ["trial", "step", "distance"], rows)
        hits = [int(np.argmax(s < tol)) if np.any(s < tol) else -1 for s in series]
        success = sum(1 for h in hits if 0 <= h <= steps)
        w.write_json("stats.json", {
            "trials": trials, "steps": steps, "tol": tol,
            "success": success, "success_rate": success / trials,
        })
        manifest = w.finish()
    except EINetError as exc:
        w.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _summary({"command": "sync", "output_dir": str(w.outdir),
              "success_rate": success / trials,
              "params_hash": manifest["params_hash"]})
    return 0


def _cmd_birkhoff(args) -> int:
    params, experiment = _checked_params(args)
    starts = int(_setting(args, experiment, "starts", 10))
    returns = int(_setting(args, experiment, "returns", 100_000))
    flow_weighted = not args.step_weighted
    w = RunWriter(_outdir(args), "birkhoff", params_hash(params), args.seed,
                  {"starts": starts, "returns": returns,
                   "weighting": "flow" if flow_weighted else "step"})
    try:
        pts = []
        for k in range(starts):
            rng = trial_rng(args.seed, k)
            x, y = rng.random(2)
            pts.append(returnmap.SectionPoint(x, y, rng.random(params.N)))
        panel = returnmap.birkhoff_panel(params, pts, returns, flow_weighted=flow_weighted)
        rows = ((k, tag, panel[tag][k]) for tag in returnmap.OBSERVABLES
                for k in range(starts))
        w.write_csv("birkhoff.csv", ["start", "observable", "value"], rows)
        spread = {tag: float(np.max(panel[tag]) - np.min(panel[tag]))
                  for tag in returnmap.OBSERVABLES}
        w.write_json("stats.json", {"spread": spread})
        manifest = w.finish()
    except EINetError as exc:
        w.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _summary({"command": "birkhoff", "output_dir": str(w.outdir),
              "max_pairwise_spread": spread,
              "params_hash": manifest["params_hash"]})
    return 0


_COMMANDS = {
    "check": _cmd_check,
    "simulate": _cmd_simulate,
    "raster": _cmd_raster,
    "lyapunov": _cmd_lyapunov,
    "curve": _cmd_curve,
    "concentration": _cmd_concentration,
    "sync": _cmd_sync,
    "birkhoff": _cmd_birkhoff,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    except EINetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
