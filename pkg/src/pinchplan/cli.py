"""Batch command line: precompute gain maps, plan activations, export results.

Every subcommand loads one scenario, writes its products into --out, and
prints a one-line timing note to stderr. File outputs are deterministic for
a fixed scenario and seed. Exit codes: 0 ok, 2 validation problem, 3 budget
refusal, 4 IO failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import zipfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import avg_snr, db_to_linear, linear_to_db
from .coverage import Activation, BudgetError, coordinate_ascent, emit_milp, exact_enumerate
from .geometry import GeometryError
from .mapio import MAP_FORMATS, export_map
from .minmax import DEFAULT_FEAS_RESTARTS, bisection_maxmin, exact_maxmin
from .scenario import Scenario, ScenarioError, load_bundled, load_scenario
from .sweeps import N_RANDOM_DRAWS, RunSummary, baseline_stats, power_sweep, threshold_sweep

DEFAULT_THRESHOLDS_DB = "12,15,18,21,24,27,30"
DEFAULT_POWERS_DBM = "30,35,40,45"


def _resolve_scenario(args) -> Scenario:
    path = Path(args.config)
    if path.exists():
        scn = load_scenario(path)
    elif path.suffix == "" and "/" not in args.config:
        scn = load_bundled(args.config)  # bare name: try the bundled set
    else:
        raise FileNotFoundError(f"scenario file not found: {args.config}")
    if args.grid_scale is not None:
        scn = scn.with_grid_scale(args.grid_scale)
    if args.seed is not None:
        scn = replace(scn, solver=replace(scn.solver, seed=args.seed))
    return scn


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_summary(out: Path, name: str, summary: RunSummary) -> Path:
    path = out / name
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary.to_json())
    return path


def _write_npz(path: Path, arrays: dict[str, np.ndarray]) -> None:
    """Uncompressed npz with a frozen timestamp so reruns are byte-identical."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            import io

            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[name]))
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def _parse_float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"{flag} expects a comma-separated list of numbers, got {text!r}")
    if not values:
        raise ValueError(f"{flag} list is empty")
    return values


def _cmd_gainmap(args) -> int:
    t0 = time.perf_counter()
    scn = _resolve_scenario(args)
    out = _out_dir(args)
    vis = scn.visibility()
    gm = scn.gain_map(vis)
    npz_path = out / "gainmap.npz"
    _write_npz(
        npz_path,
        {
            "gains": gm.gains,
            "dist_sq": gm.dist_sq,
            "los": vis.los,
            "valid": gm.valid,
            "x_centers": scn.grid.x_centers(),
            "y_centers": scn.grid.y_centers(),
        },
    )
    blocked_fraction = float(1.0 - vis.los.mean())
    summary = RunSummary(
        digest=scn.digest(),
        method="gainmap",
        objective={
            "blocked_fraction": blocked_fraction,
            "valid_cells": int(np.count_nonzero(gm.valid)),
            "total_cells": int(gm.valid.size),
        },
        activation=None,
        seed=scn.solver.seed,
        wall_time_s=time.perf_counter() - t0,
    )
    _write_summary(out, "gainmap_summary.json", summary)
    _note(args, "gainmap", [npz_path, out / "gainmap_summary.json"], summary.wall_time_s)
    return 0


def _cmd_coverage(args) -> int:
    t0 = time.perf_counter()
    scn = _resolve_scenario(args)
    out = _out_dir(args)
    gm = scn.gain_map()
    thr_db = scn.solver.threshold_db if args.gamma_db is None else args.gamma_db
    thr = db_to_linear(thr_db)
    if args.exact:
        res = exact_enumerate(gm, scn.params, thr)
    else:
        res = coordinate_ascent(
            Activation.centered(gm.n_waveguides, gm.n_taps),
            gm,
            scn.params,
            thr,
            max_sweeps=scn.solver.max_sweeps,
            restarts=args.restarts,
            seed=scn.solver.seed,
        )
    if args.milp is not None:
        emit_milp(gm, scn.params, thr, str(out / args.milp))
    export_map(res.snr_field, gm.valid, scn.grid, out / "coverage_map.csv", fmt="csv")
    summary = RunSummary(
        digest=scn.digest(),
        method=f"coverage/{res.method}",
        objective={
            "threshold_db": thr_db,
            "covered_count": res.covered_count,
            "coverage_fraction": res.coverage_fraction,
            "sweeps_used": res.sweeps_used,
        },
        activation=res.activation.one_based(),
        seed=scn.solver.seed,
        wall_time_s=time.perf_counter() - t0,
    )
    _write_summary(out, "coverage_summary.json", summary)
    _note(args, "coverage", [out / "coverage_map.csv", out / "coverage_summary.json"], summary.wall_time_s)
    return 0


def _cmd_minmax(args) -> int:
    t0 = time.perf_counter()
    scn = _resolve_scenario(args)
    out = _out_dir(args)
    gm = scn.gain_map()
    eps_t = scn.solver.eps_t if args.eps_t is None else args.eps_t
    if args.exact:
        res = exact_maxmin(gm, scn.params)
    else:
        res = bisection_maxmin(
            gm,
            scn.params,
            eps_t=eps_t,
            initial=Activation.centered(gm.n_waveguides, gm.n_taps),
            max_sweeps=scn.solver.max_sweeps,
            exact_feasibility=args.exact_feasibility,
            restarts=args.restarts,
            seed=scn.solver.seed,
        )
    export_map(res.snr_field, gm.valid, scn.grid, out / "minmax_map.csv", fmt="csv")
    summary = RunSummary(
        digest=scn.digest(),
        method="minmax/" + ("exact" if res.exact else "bisection"),
        objective={
            "worst_grid_db": linear_to_db(res.t_star),
            "worst_grid_linear": res.t_star,
            "bisection_iters": res.bisection_iters,
            "feasibility_evals": res.feasibility_evals,
            "eps_t": eps_t,
        },
        activation=res.activation.one_based(),
        seed=scn.solver.seed,
        wall_time_s=time.perf_counter() - t0,
    )
    _write_summary(out, "minmax_summary.json", summary)
    _note(args, "minmax", [out / "minmax_map.csv", out / "minmax_summary.json"], summary.wall_time_s)
    return 0


def _cmd_baseline(args) -> int:
    t0 = time.perf_counter()
    scn = _resolve_scenario(args)
    out = _out_dir(args)
    stats = baseline_stats(scn, n_random=args.draws)
    fgm = scn.fixed_array_map()
    fixed_field = avg_snr(np.zeros(scn.layout.count, dtype=int), fgm, scn.params)
    export_map(fixed_field, fgm.valid, scn.grid, out / "fixed_map.csv", fmt="csv")
    summary = RunSummary(
        digest=scn.digest(),
        method="baseline",
        objective=stats,
        activation=None,
        seed=scn.solver.seed,
        wall_time_s=time.perf_counter() - t0,
    )
    _write_summary(out, "baseline_summary.json", summary)
    _note(args, "baseline", [out / "fixed_map.csv", out / "baseline_summary.json"], summary.wall_time_s)
    return 0


def _cmd_sweep_threshold(args) -> int:
    t0 = time.perf_counter()
    scn = _resolve_scenario(args)
    out = _out_dir(args)
    thresholds = _parse_float_list(args.gammas, "--gammas")
    table = threshold_sweep(scn, thresholds, exact=args.exact, n_random=args.draws)
    csv_path = out / "threshold_sweep.csv"
    table.write_csv(csv_path)
    summary = RunSummary(
        digest=scn.digest(),
        method="sweep-threshold/" + ("exact" if args.exact else "coordinate_ascent"),
        objective={
            "thresholds_db": thresholds,
            "optimized": table.columns.get("optimized"),
            "random_mean": table.columns.get("random_mean"),
            "fixed": table.columns.get("fixed"),
        },
        activation=None,
        seed=scn.solver.seed,
        wall_time_s=time.perf_counter() - t0,
    )
    _write_summary(out, "threshold_sweep_summary.json", summary)
    _note(args, "sweep-threshold", [csv_path, out / "threshold_sweep_summary.json"], summary.wall_time_s)
    return 0


def _cmd_sweep_power(args) -> int:
    t0 = time.perf_counter()
    scn = _resolve_scenario(args)
    out = _out_dir(args)
    powers = _parse_float_list(args.powers, "--powers")
    table, minmax_res = power_sweep(scn, powers, n_random=args.draws, exact=args.exact)
    csv_path = out / "power_sweep.csv"
    table.write_csv(csv_path)
    summary = RunSummary(
        digest=scn.digest(),
        method="sweep-power/" + ("exact" if args.exact else "bisection"),
        objective={
            "powers_dbm": powers,
            "optimized_db": table.columns.get("optimized_db"),
            "random_mean_db": table.columns.get("random_mean_db"),
            "fixed_db": table.columns.get("fixed_db"),
        },
        activation=minmax_res.activation.one_based() if minmax_res else None,
        seed=scn.solver.seed,
        wall_time_s=time.perf_counter() - t0,
    )
    _write_summary(out, "power_sweep_summary.json", summary)
    _note(args, "sweep-power", [csv_path, out / "power_sweep_summary.json"], summary.wall_time_s)
    return 0


def _cmd_map(args) -> int:
    t0 = time.perf_counter()
    scn = _resolve_scenario(args)
    out = _out_dir(args)
    gm = scn.gain_map()
    try:
        act = Activation.from_one_based(int(tok) for tok in args.activation.split(","))
    except ValueError:
        raise ValueError(f"--activation expects comma-separated 1-based tap indices, got {args.activation!r}")
    field = avg_snr(act.as_array(), gm, scn.params)
    path = out / f"map.{args.format}"
    export_map(field, gm.valid, scn.grid, path, fmt=args.format)
    worst_db = linear_to_db(float(field[gm.valid].min()))
    summary = RunSummary(
        digest=scn.digest(),
        method="map",
        objective={"worst_valid_db": worst_db, "format": args.format},
        activation=act.one_based(),
        seed=scn.solver.seed,
        wall_time_s=time.perf_counter() - t0,
    )
    _write_summary(out, "map_summary.json", summary)
    _note(args, "map", [path, out / "map_summary.json"], summary.wall_time_s)
    return 0


def _note(args, cmd: str, files: list[Path], dt: float | None) -> None:
    names = ", ".join(str(p) for p in files)
    print(f"[pinchplan] {cmd}: wrote {names} in {dt:.2f} s", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario JSON path, or a bundled name like 'table1'")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--out", default="out", help="output directory (created if missing)")
    common.add_argument("--exact", action="store_true", help="use exhaustive enumeration (budget-guarded)")
    common.add_argument("--grid-scale", type=float, default=None, help="rescale grid resolution by this factor")

    parser = argparse.ArgumentParser(prog="pinchplan", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pinchplan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gainmap", parents=[common], help="precompute and store the gain tensor")
    p.set_defaults(func=_cmd_gainmap)

    p = sub.add_parser("coverage", parents=[common], help="maximize threshold coverage")
    p.add_argument("--gamma-db", type=float, default=None, help="SNR threshold in dB (default: scenario value)")
    p.add_argument("--restarts", type=int, default=1, help="extra seeded restarts for the ascent")
    p.add_argument("--milp", default=None, metavar="FILE", help="also write the MILP as an LP file")
    p.set_defaults(func=_cmd_coverage)

    p = sub.add_parser("minmax", parents=[common], help="maximize the worst-grid average SNR")
    p.add_argument("--eps-t", type=float, default=None, help="bisection bracket width, linear SNR")
    p.add_argument("--exact-feasibility", action="store_true", help="bisect with exhaustive feasibility checks")
    p.add_argument(
        "--restarts", type=int, default=DEFAULT_FEAS_RESTARTS,
        help="deficit-descent starts per feasibility check"
    )
    p.set_defaults(func=_cmd_minmax)

    p = sub.add_parser("baseline", parents=[common], help="fixed-array and random-activation references")
    p.add_argument("--draws", type=int, default=N_RANDOM_DRAWS, help="random activations to average")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("sweep-threshold", parents=[common], help="coverage versus SNR threshold")
    p.add_argument("--gammas", default=DEFAULT_THRESHOLDS_DB, help="comma-separated thresholds in dB")
    p.add_argument("--draws", type=int, default=N_RANDOM_DRAWS, help="random activations to average")
    p.set_defaults(func=_cmd_sweep_threshold)

    p = sub.add_parser("sweep-power", parents=[common], help="worst-grid SNR versus transmit power")
    p.add_argument("--powers", default=DEFAULT_POWERS_DBM, help="comma-separated powers in dBm")
    p.add_argument("--draws", type=int, default=N_RANDOM_DRAWS, help="random activations to average")
    p.set_defaults(func=_cmd_sweep_power)

    p = sub.add_parser("map", parents=[common], help="export the SNR map of a given activation")
    p.add_argument("--activation", required=True, help="comma-separated 1-based tap indices, one per waveguide")
    p.add_argument("--format", choices=MAP_FORMATS, default="csv")
    p.set_defaults(func=_cmd_map)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetError as exc:
        print(f"pinchplan: budget refusal: {exc}", file=sys.stderr)
        return 3
    except (ScenarioError, GeometryError, ValueError) as exc:
        print(f"pinchplan: invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pinchplan: io error: {exc}", file=sys.stderr)
        return 4


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
