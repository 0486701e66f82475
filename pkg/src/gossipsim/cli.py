"""Command-line front end.

Subcommands:
  run    --config PATH --out DIR [--seed N]
  sweep  --config PATH --axis NAME --values CSV --seeds CSV --out DIR [--jobs K]
  check  --out DIR

Exit codes are a stable contract: 0 success, 1 runtime or invariant
failure, 2 usage or config error.  The GOSSIPSIM_JOBS environment
variable overrides --jobs.  Everything runs offline.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    RunConfig,
    build_problem_suite,
    load_run_config,
    run_config_to_dict,
    spawn_seeded,
)
from .diagnostics import read_trace_csv, write_trace_csv
from .engine import run_simulation
from .objective import suite_digest

SWEEP_AXES = ("dropout_p", "lambda", "alpha", "deemphasis", "eta")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _atomic_write(path: Path, writer) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


def _write_json(path: Path, payload: dict) -> None:
    def do(p: Path) -> None:
        with open(p, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    _atomic_write(path, do)


def _run_one(config: RunConfig, out_dir: Path) -> dict:
    """Build the suite, simulate, write trace.csv and manifest.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    suite = build_problem_suite(config)
    rows = run_simulation(config.sim, suite)
    _atomic_write(out_dir / "trace.csv", lambda p: write_trace_csv(p, rows))
    manifest = {
        "config": run_config_to_dict(config),
        "seeds": [config.sim.seed],
        "outputs": ["trace.csv"],
        "suite_sha256": suite_digest(suite),
        "version": __version__,
    }
    _write_json(out_dir / "manifest.json", manifest)
    return manifest


def cmd_run(config_path: str, out_dir: str, seed=None) -> int:
    try:
        config = load_run_config(config_path)
        if seed is not None:
            config = spawn_seeded(config, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _run_one(config, Path(out_dir))
    except Exception as exc:  # CLI boundary: report and set the exit code
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _apply_axis(config: RunConfig, axis: str, value: float) -> RunConfig:
    sim, part = config.sim, config.partition
    if axis == "dropout_p":
        sim = replace(sim, churn=replace(sim.churn, dropout_p=value))
    elif axis == "lambda":
        sim = replace(sim, churn=replace(sim.churn, rate=value))
    elif axis == "alpha":
        if math.isinf(value):
            part = replace(part, scheme="iid", alpha=math.inf)
        else:
            part = replace(part, scheme="dirichlet", alpha=value)
    elif axis == "deemphasis":
        sim = replace(sim, deemphasis=value)
    elif axis == "eta":
        sim = replace(sim, eta=replace(sim.eta, eta0=value))
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    return RunConfig(sim=sim, partition=part, suite=config.suite)


def _fmt_value(v: float) -> str:
    return "inf" if math.isinf(v) else format(v, ".6g")


def _sweep_task(args) -> tuple[str, int, float, float]:
    """One sweep run in a worker process.  Returns (value_label, seed,
    final dist_wtilde_sq, final mean_loss)."""
    config, value_label, run_dir = args
    _run_one(config, Path(run_dir))
    rows = read_trace_csv(Path(run_dir) / "trace.csv")
    last = rows[-1]
    return value_label, config.sim.seed, last.dist_wtilde_sq, last.mean_loss


def cmd_sweep(config_path, axis, values, seeds, out_dir, jobs=None) -> int:
    try:
        if axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
        if not values:
            raise ConfigError("sweep needs a nonempty values list")
        if not seeds:
            raise ConfigError("sweep needs a nonempty seeds list")
        base = load_run_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(out_dir)
    tasks = []
    for value in values:
        label = _fmt_value(value)
        for seed in seeds:
            config = _apply_axis(spawn_seeded(base, seed), axis, value)
            run_dir = out / "runs" / f"{axis}={label}" / f"seed={seed}"
            tasks.append((config, label, str(run_dir)))

    jobs = int(os.environ.get("GOSSIPSIM_JOBS", jobs or 1))
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_sweep_task, tasks))
        else:
            results = [_sweep_task(t) for t in tasks]
    except Exception as exc:  # CLI boundary: report and set the exit code
        print(f"sweep failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    by_value: dict[str, list] = {}
    for label, seed, dist, loss in results:
        by_value.setdefault(label, []).append((dist, loss))
    lines = [
        "axis,value,runs,final_dist_wtilde_sq_mean,final_dist_wtilde_sq_std,"
        "final_mean_loss_mean,final_mean_loss_std"
    ]
    for value in values:
        label = _fmt_value(value)
        dists = np.array([d for d, _ in by_value[label]])
        losses = np.array([l for _, l in by_value[label]])
        k = len(dists)
        lines.append(
            ",".join(
                [
                    axis,
                    label,
                    str(k),
                    format(dists.mean(), ".12g"),
                    format(dists.std(ddof=1) if k > 1 else 0.0, ".12g"),
                    format(losses.mean(), ".12g"),
                    format(losses.std(ddof=1) if k > 1 else 0.0, ".12g"),
                ]
            )
        )

    def write_summary(p: Path) -> None:
        with open(p, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "summary.csv", write_summary)
    _write_json(
        out / "manifest.json",
        {
            "config": run_config_to_dict(base),
            "axis": axis,
            "values": [_fmt_value(v) for v in values],
            "seeds": list(seeds),
            "outputs": ["summary.csv"]
            + [str(Path(t[2]).relative_to(out) / "trace.csv") for t in tasks],
            "version": __version__,
        },
    )
    return EXIT_OK


def _eta_at(config: dict, t: int) -> float:
    eta = config["eta"]
    return eta["eta0"] if eta["kind"] == "constant" else eta["eta0"] / (1.0 + t)


def _check_traces(out: Path):
    """Yield (trace path, rows, config echo) for every run under out."""
    manifests = sorted(out.rglob("manifest.json"))
    for mpath in manifests:
        with open(mpath) as fh:
            manifest = json.load(fh)
        trace = mpath.parent / "trace.csv"
        if trace.exists():
            yield trace, read_trace_csv(trace), manifest["config"]


def cmd_check(out_dir) -> int:
    out = Path(out_dir)
    if not out.exists():
        print(f"check error: output directory {out} not found", file=sys.stderr)
        return EXIT_USAGE
    found = list(_check_traces(out))
    if not found:
        print("check error: no completed runs (manifest.json + trace.csv) found", file=sys.stderr)
        return EXIT_USAGE

    bound_hold = 0
    bound_total = 0
    failures = []

    def check(name: str, ok: bool, detail: str) -> None:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok:
            failures.append(name)

    nonneg_ok, counts_ok, order_ok, zero_gap_ok = True, True, True, True
    nonneg_where = counts_where = order_where = zero_where = ""
    for trace, rows, config in found:
        n = config["n"]
        for row in rows:
            if min(row.dist_wbar_sq, row.dist_wtilde_sq, row.div_lhs, row.div_rhs_main,
                   row.div_rhs_appendix, row.beta_t, row.gap_term, row.gamma) < 0:
                nonneg_ok, nonneg_where = False, f"{trace} t={row.t}"
            if row.n1 < 0 or row.n2 < 0 or row.n1 + row.n2 != n:
                counts_ok, counts_where = False, f"{trace} t={row.t}"
            if _eta_at(config, row.t) <= 1.0 and row.div_rhs_appendix < row.div_rhs_main:
                order_ok, order_where = False, f"{trace} t={row.t}"
            if row.n2 == 0 and row.div_lhs > 1e-12:
                zero_gap_ok, zero_where = False, f"{trace} t={row.t}"
            bound_total += 1
            bound_hold += row.div_lhs <= row.div_rhs_appendix

    check("nonnegative distances", nonneg_ok,
          "all distance and bound columns nonnegative" if nonneg_ok else f"negative value in {nonneg_where}")
    check("node counts", counts_ok,
          "n1+n2=n on every row" if counts_ok else f"bad split in {counts_where}")
    check("bound constant ordering", order_ok,
          "appendix constant dominates main constant" if order_ok else f"violated in {order_where}")
    check("zero gap at full participation", zero_gap_ok,
          "div_lhs <= 1e-12 whenever n2=0" if zero_gap_ok else f"violated in {zero_where}")
    rate = bound_hold / bound_total
    check(
        "divergence bound rate",
        rate >= 0.99,
        f"div_lhs <= div_rhs_appendix on {bound_hold}/{bound_total} rounds ({rate:.2%})",
    )

    summary = out / "summary.csv"
    if summary.exists():
        ok, detail = _verify_summary(out, summary)
        check("summary consistency", ok, detail)

    return EXIT_OK if not failures else EXIT_RUNTIME


def _verify_summary(out: Path, summary: Path):
    """Recompute summary statistics from the per-run traces."""
    with open(summary) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    idx = {name: i for i, name in enumerate(header)}
    for row in rows:
        axis, label = row[idx["axis"]], row[idx["value"]]
        traces = sorted((out / "runs" / f"{axis}={label}").glob("seed=*/trace.csv"))
        if len(traces) != int(row[idx["runs"]]):
            return False, f"run count mismatch for {axis}={label}"
        finals = [read_trace_csv(t)[-1] for t in traces]
        dists = np.array([r.dist_wtilde_sq for r in finals])
        losses = np.array([r.mean_loss for r in finals])
        k = len(dists)
        expected = {
            "final_dist_wtilde_sq_mean": dists.mean(),
            "final_dist_wtilde_sq_std": dists.std(ddof=1) if k > 1 else 0.0,
            "final_mean_loss_mean": losses.mean(),
            "final_mean_loss_std": losses.std(ddof=1) if k > 1 else 0.0,
        }
        for name, value in expected.items():
            if abs(float(row[idx[name]]) - value) > 1e-9 * max(1.0, abs(value)):
                return False, f"{name} mismatch for {axis}={label}"
    return True, "summary matches recomputation from traces"


def _parse_floats(text: str):
    items = [s for s in text.split(",") if s.strip()]
    return [math.inf if s.strip().lower() in ("inf", "infinity") else float(s) for s in items]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gossipsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"gossipsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--seeds", required=True, help="comma-separated integer seeds")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--jobs", type=int, default=None)

    p_check = sub.add_parser("check", help="verify invariants of completed outputs")
    p_check.add_argument("--out", required=True)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0

    if args.command == "run":
        return cmd_run(args.config, args.out, args.seed)
    if args.command == "sweep":
        try:
            values = _parse_floats(args.values)
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        return cmd_sweep(args.config, args.axis, values, seeds, args.out, args.jobs)
    return cmd_check(args.out)


def entrypoint() -> None:
    raise SystemExit(main())
