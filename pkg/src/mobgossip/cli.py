"""Command-line front end: ``run``, ``sweep``, ``plot`` and ``oracle``.

Exit status is 0 on success, 2 for malformed input and 3 when a run hits its
slot budget before every message completes.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis
from .core import ConfigError, SimConfig, derive_seed, derive_stream, validate
from .engine import run as run_engine

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_INCOMPLETE = 0, 2, 3

CONFIG_COLUMNS = ["n", "k", "v", "theta", "phy_mode", "P", "eta", "alpha", "beta", "c_success",
                  "protocol", "mobility", "injection", "seed", "max_slots"]
RESULT_COLUMNS = (["schema_version", "point", "replicate"] + CONFIG_COLUMNS
                  + ["slots_run", "completed", "median_T", "max_T", "F_total", "F_source_total",
                     "incomplete", "wall_clock"])
SWEEP_AXES = ("n", "k", "v", "theta", "protocol", "phy_mode", "mobility", "injection", "c_success")


class UsageError(Exception):
    pass


def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(rows, columns, out=None):
    """RFC-4180 CSV with a header row; ``out`` is a path or None for stdout."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c, "")) for c in columns])
    text = buf.getvalue()
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def result_row(config, metrics, point, replicate, wall):
    done = metrics.completion[metrics.completion >= 0]
    row = {"schema_version": SCHEMA_VERSION, "point": point, "replicate": replicate}
    row.update({c: metrics.config[c] for c in CONFIG_COLUMNS})
    row.update({
        "slots_run": metrics.slots_run,
        "completed": int(len(done)),
        "median_T": float(np.median(done)) if len(done) else "",
        "max_T": int(done.max()) if len(done) == config.k else "",
        "F_total": int(metrics.wasted.sum()),
        "F_source_total": int(metrics.source_wasted.sum()),
        "incomplete": bool(metrics.incomplete),
        "wall_clock": round(wall, 3),
    })
    return row


def _run_point(args):
    config, point, replicate = args
    t0 = time.perf_counter()
    metrics = run_engine(config)
    return result_row(config, metrics, point, replicate, time.perf_counter() - t0), metrics


def _env_seed(default):
    env = os.environ.get("MOBGOSSIP_SEED")
    if env is None:
        return default
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"MOBGOSSIP_SEED must be an integer, got {env!r}") from None


def config_from_args(args):
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "expected a JSON object")
    flags = {"n": args.n, "k": args.k, "v": args.v, "theta": args.theta, "protocol": args.protocol,
             "phy_mode": args.phy, "mobility": args.mobility, "injection": args.injection,
             "max_slots": args.max_slots, "c_success": args.c_success}
    data.update({key: val for key, val in flags.items() if val is not None})
    if args.seed is not None:
        data["seed"] = args.seed
    elif "seed" not in data:
        data["seed"] = _env_seed(0)
    return validate(SimConfig.from_dict(data))


def write_series(metrics, path):
    k = metrics.counts.shape[1]
    cols = ["slot"] + [f"N_{i}" for i in range(k)] + [f"F_{i}" for i in range(k)]
    rows = []
    for j, t in enumerate(metrics.sample_slots):
        row = {"slot": t}
        row.update({f"N_{i}": int(metrics.counts[j, i]) for i in range(k)})
        row.update({f"F_{i}": int(metrics.wasted_series[j, i]) for i in range(k)})
        rows.append(row)
    write_csv(rows, cols, path)


def cmd_run(args):
    config = config_from_args(args)
    reps = args.replicates or 1
    jobs = []
    for r in range(reps):
        seed = config.seed if reps == 1 else derive_seed(config.seed, f"0.{r}")
        jobs.append((config.replace(seed=seed), 0, r))
    results = _execute(jobs, args.jobs)
    write_csv([row for row, _ in results], RESULT_COLUMNS, args.out)
    if args.series:
        write_series(results[0][1], args.series)
    return EXIT_INCOMPLETE if any(m.incomplete for _, m in results) else EXIT_OK


def _execute(jobs, n_jobs):
    if n_jobs and n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(_run_point, jobs))
    return [_run_point(j) for j in jobs]


def sweep_points(spec):
    """Validated ``(point_index, config)`` pairs over the cross-product of the axes."""
    base = spec.get("base", {})
    axes = spec.get("axes", {})
    bad = [a for a in axes if a not in SWEEP_AXES]
    if bad:
        raise ConfigError(bad[0], "not a sweepable axis")
    names = list(axes)
    points = []
    for idx, combo in enumerate(itertools.product(*(axes[a] for a in names))):
        data = dict(base)
        data.update(zip(names, combo))
        points.append((idx, validate(SimConfig.from_dict(data))))
    return points


def _same_point(row, config, point, replicate):
    if int(row.get("point", -1)) != point or int(row.get("replicate", -1)) != replicate:
        return False
    d = config.to_dict()
    return all(row.get(c) == _fmt(d[c]) for c in CONFIG_COLUMNS)


def cmd_sweep(args):
    try:
        spec = json.loads(Path(args.spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("spec", f"cannot read {args.spec}: {exc}") from None
    reps = int(args.replicates or spec.get("replicates", 1))
    root = args.seed if args.seed is not None else spec.get("root_seed", _env_seed(0))
    points = sweep_points(spec)  # every point validates before any run starts
    out = args.out or spec.get("out")

    previous = read_csv(out) if out and Path(out).exists() else []
    rows, jobs = [], []
    for idx, config in points:
        for r in range(reps):
            cfg = config.replace(seed=derive_seed(root, f"{idx}.{r}"))
            match = next((row for row in previous if _same_point(row, cfg, idx, r)), None)
            if match is not None:
                rows.append(match)
            else:
                jobs.append((cfg, idx, r))
    results = _execute(jobs, args.jobs)
    rows.extend(row for row, _ in results)
    rows.sort(key=lambda row: (int(row["point"]), int(row["replicate"])))
    write_csv(rows, RESULT_COLUMNS, out)
    incomplete = any(str(row["incomplete"]) in ("true", "True") for row in rows)
    return EXIT_INCOMPLETE if incomplete else EXIT_OK


_SAFE_FUNCS = {"log": math.log, "log2": math.log2, "log10": math.log10, "sqrt": math.sqrt,
               "exp": math.exp, "abs": abs, "min": min, "max": max}
_SAFE_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Name, ast.Load, ast.Constant, ast.Call,
               ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Mod, ast.FloorDiv)


def compile_expression(text):
    """Arithmetic over row fields plus log/sqrt/exp; anything else is rejected."""
    tree = ast.parse(text, mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _SAFE_NODES):
            raise UsageError(f"unsupported syntax in expression {text!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _SAFE_FUNCS):
            raise UsageError(f"unsupported function in expression {text!r}")
    code = compile(tree, "<expr>", "eval")
    names = {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)} - set(_SAFE_FUNCS)

    def evaluate(row):
        env = dict(_SAFE_FUNCS)
        for name in names:
            if name not in row:
                raise UsageError(f"missing field {name!r}")
            env[name] = float(row[name])
        return eval(code, {"__builtins__": {}}, env)

    return evaluate


def cmd_plot(args):
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    rows = read_csv(args.csv)
    if rows:
        for field in (args.x, args.y):
            if field not in rows[0]:
                raise UsageError(f"missing field {field!r}")
    norm = compile_expression(args.normalizer) if args.normalizer else (lambda row: 1.0)
    xs, ys = [], []
    for row in rows:
        if row[args.y] in ("", None) or row[args.x] in ("", None):
            continue
        xs.append(float(row[args.x]))
        ys.append(float(row[args.y]) / norm(row))

    plt.rcParams["svg.hashsalt"] = "mobgossip"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if xs:
        ax.plot(xs, ys, "o", ms=4)
    if args.loglog and xs:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(args.x)
    ax.set_ylabel(args.y if not args.normalizer else f"{args.y} / ({args.normalizer})")
    fig.tight_layout()
    fig.savefig(args.out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return EXIT_OK


def _oracle_rows(args):
    seed = args.seed if args.seed is not None else _env_seed(0)
    rng = derive_stream(seed, f"oracle.{args.name}")
    name = args.name
    if name == "mixing":
        eps = args.eps
        a = analysis.exact_mixing(args.s, args.boundary, eps, "doubling")
        b = analysis.exact_mixing(args.s, args.boundary, eps, "iterate")
        return ["s", "boundary", "eps", "t_mix_doubling", "t_mix_iterate"], [
            {"s": args.s, "boundary": args.boundary, "eps": eps, "t_mix_doubling": a, "t_mix_iterate": b}]
    if name == "hitting":
        c_h = args.c_h if args.c_h is not None else analysis.HIT_CONSTANT
        horizon = args.horizon or analysis.hitting_horizon(args.s, args.n, c_h)
        est = analysis.hitting_time_mc(args.s, horizon, args.trials, rng)
        return ["s", "n", "c_h", "horizon", "estimate", "stderr", "trials"], [
            {"s": args.s, "n": args.n, "c_h": c_h, "horizon": horizon, "estimate": est.mean,
             "stderr": est.stderr, "trials": est.trials}]
    if name == "returns":
        horizons = [int(h) for h in str(args.horizon or 1).split(",")]
        curve = analysis.return_count_curve(horizons, args.trials, rng)
        return ["horizon", "estimate", "stderr", "trials"], [
            {"horizon": h, "estimate": e.mean, "stderr": e.stderr, "trials": e.trials} for h, e in curve.items()]
    if name == "concentration":
        b = args.b or int(40 * args.m * math.log(args.n))
        res = analysis.concentration_check(b, args.m, args.trials, rng, n=args.n)
        return ["b", "m", "trials", "lower", "upper", "min_count", "max_count", "violations"], [
            {"b": b, "m": args.m, "trials": res.trials, "lower": res.lower, "upper": res.upper,
             "min_count": res.min_count, "max_count": res.max_count, "violations": res.violations}]
    if name == "conductance":
        g = parse_graph(args.graph, seed)
        return ["graph", "n", "connected", "phi"], [
            {"graph": args.graph, "n": g.n, "connected": g.is_connected(), "phi": analysis.conductance_exact(g)}]
    if name == "phy-constant":
        from .phy import estimate_success_constant

        cfg = validate(SimConfig(n=args.n, theta=args.theta, v=args.v, phy_mode="sinr",
                                 mobility=args.mobility))
        est = estimate_success_constant(cfg, args.slots, rng)
        return ["n", "theta", "alpha", "beta", "P", "slots", "rate", "successes", "attempts"], [
            {"n": cfg.n, "theta": cfg.theta, "alpha": cfg.alpha, "beta": cfg.beta, "P": cfg.P,
             "slots": args.slots, "rate": est.rate, "successes": est.successes, "attempts": est.attempts}]
    if name == "strip-profile":
        from .engine import init_world, strip_profile
        from .fastpath import fast_forward

        cfg = validate(SimConfig(n=args.n, k=args.k, mobility="static", protocol="random_push",
                                 phy_mode="bernoulli", injection=f"late:{args.w}", seed=seed,
                                 max_slots=args.max_slots))
        world = init_world(cfg)
        while world.inject_time[world.probe] < 0 and world.t < cfg.max_slots:
            fast_forward(world, cfg.max_slots)
        if world.inject_time[world.probe] < 0:
            raise UsageError("probe message was never injected within the slot budget")
        target = world.inject_time[world.probe] + args.offset
        while world.t < target:
            fast_forward(world, target)
        prof = strip_profile(world)
        return ["slot", "strip", "count"], [
            {"slot": world.t, "strip": lvl + 1, "count": int(c)} for lvl, c in enumerate(prof)]
    raise UsageError(f"unknown oracle {name!r}")


def parse_graph(text, seed=0):
    """``cycleN``, ``completeN`` or ``rgg:N`` (radius sqrt(32 log N / N))."""
    if text.startswith("cycle"):
        return analysis.cycle_graph(int(text[5:]))
    if text.startswith("complete"):
        return analysis.complete_graph(int(text[8:]))
    if text.startswith("rgg:"):
        n = int(text[4:])
        pts = derive_stream(seed, f"rgg.{n}").random((n, 2))
        return analysis.RggGraph.from_positions(pts, analysis.rgg_radius(n))
    raise UsageError(f"unknown graph {text!r}")


def cmd_oracle(args):
    columns, rows = _oracle_rows(args)
    write_csv(rows, columns, args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="mobgossip", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def sim_flags(sp):
        sp.add_argument("--config", help="JSON config file; flags override its fields")
        sp.add_argument("--n", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--v", type=float)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--protocol", choices=["random_push", "mobile_push"])
        sp.add_argument("--phy", choices=["sinr", "bernoulli"])
        sp.add_argument("--mobility", choices=["edge_stay", "torus_wrap", "static"])
        sp.add_argument("--injection", help="simultaneous | late:W")
        sp.add_argument("--c-success", dest="c_success", type=float)
        sp.add_argument("--max-slots", dest="max_slots", type=int)

    r = sub.add_parser("run", help="run one configuration")
    sim_flags(r)
    r.add_argument("--seed", type=int)
    r.add_argument("--replicates", type=int, default=1)
    r.add_argument("--out", help="result CSV (default stdout)")
    r.add_argument("--series", help="optional N_i(t)/F_i(t) time-series CSV")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run the cross-product described by a JSON spec")
    s.add_argument("spec")
    s.add_argument("--seed", type=int)
    s.add_argument("--replicates", type=int)
    s.add_argument("--out")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plot", help="scatter plot of a result CSV as SVG")
    pl.add_argument("csv")
    pl.add_argument("--x", required=True)
    pl.add_argument("--y", required=True)
    pl.add_argument("--normalizer", help="expression over row fields, e.g. 'k*log(n)**2'")
    pl.add_argument("--loglog", action="store_true")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)

    o = sub.add_parser("oracle", help="analysis oracles")
    o.add_argument("name", choices=["mixing", "hitting", "returns", "concentration", "conductance",
                                    "phy-constant", "strip-profile"])
    o.add_argument("--s", type=int, default=8)
    o.add_argument("--boundary", default="torus_wrap", choices=["edge_stay", "torus_wrap"])
    o.add_argument("--mobility", default="edge_stay", choices=["edge_stay", "torus_wrap", "static"])
    o.add_argument("--eps", type=float, default=0.25)
    o.add_argument("--n", type=int, default=1024)
    o.add_argument("--k", type=int, default=64)
    o.add_argument("--w", type=int, default=32)
    o.add_argument("--m", type=int, default=64)
    o.add_argument("--b", type=int)
    o.add_argument("--v", type=float, default=1 / 3)
    o.add_argument("--theta", type=float, default=0.3)
    o.add_argument("--c-h", dest="c_h", type=float)
    o.add_argument("--horizon", help="slot horizon; comma list for returns")
    o.add_argument("--trials", type=int, default=10_000)
    o.add_argument("--slots", type=int, default=200)
    o.add_argument("--offset", type=int, default=6)
    o.add_argument("--max-slots", dest="max_slots", type=int, default=10_000_000)
    o.add_argument("--graph", default="cycle4")
    o.add_argument("--seed", type=int)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "oracle" and args.name == "hitting" and args.horizon is not None:
            args.horizon = int(args.horizon)
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"mobgossip: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
