"""Command-line entry point: generate instances, run solvers, sweep grids.

Exit codes: 0 success (plan validated), 2 usage/config error, 3 infeasible
instance or baseline, 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import baselines, dcg_engine, instance as instance_mod
from .baselines import InfeasiblePlanError
from .instance import GeneratorConfig, WindowPolicy
from .rmp import EmittingPath, MissionPath, RmpInfeasible

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3

SOLVERS = ("dcg", "greedy", "emitting-follow", "mission-emitting", "fixed")


def _parse_area(text: str) -> tuple[float, float]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("area must look like 500x500")
    return (float(parts[0]), float(parts[1]))


def _parse_int_list(text: str) -> list[int]:
    out: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if "-" in token and not token.startswith("-"):
            lo, hi = token.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(token))
    return out


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covroute",
        description="Coordinated mission/emitter routing solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random clustered instance")
    gen.add_argument("--out", required=True)
    gen.add_argument("--jobs", type=int, required=True)
    gen.add_argument("--clusters", type=int, required=True)
    gen.add_argument("--cluster-radius", type=float, required=True)
    gen.add_argument("--coverage-radius", type=float, default=50.0)
    gen.add_argument("--mesh", type=float, default=50.0)
    gen.add_argument("--area", type=_parse_area, default=(500.0, 500.0))
    gen.add_argument("--horizon", type=int, default=60)
    gen.add_argument("--mission-speed", type=float, default=50.0)
    gen.add_argument("--emitter-speed", type=float, default=50.0)
    gen.add_argument("--seed", type=int, default=0)

    solve = sub.add_parser("solve", help="solve an instance file")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--solver", choices=SOLVERS, default="dcg")
    solve.add_argument("--warm-start", choices=("none", "partial", "full"), default="partial")
    solve.add_argument(
        "--prune",
        action="append",
        choices=("input", "primal", "dual"),
        default=None,
        help="enable only the listed pruning strategies (repeatable)",
    )
    solve.add_argument("--fleet-min", action="store_true")
    solve.add_argument("--max-iterations", type=int, default=400)
    solve.add_argument("--cap", type=int, default=None, help="columns kept per pricing call")
    solve.add_argument("--out", default=None, help="output directory")

    exp = sub.add_parser("experiment", help="run a parameter grid")
    exp.add_argument("--out", required=True)
    exp.add_argument("--jobs", type=_parse_int_list, required=True)
    exp.add_argument("--clusters", type=_parse_int_list, required=True)
    exp.add_argument("--cluster-radius", type=_parse_float_list, required=True)
    exp.add_argument("--coverage-radius", type=_parse_float_list, default=[50.0])
    exp.add_argument("--seeds", type=_parse_int_list, required=True)
    exp.add_argument("--solvers", default="dcg,greedy")
    exp.add_argument("--warm-start", choices=("none", "partial", "full"), default="partial")
    exp.add_argument("--fleet-min", action="store_true")
    exp.add_argument("--horizon", type=int, default=60)
    exp.add_argument("--workers", type=int, default=1)
    return parser


# ---------------------------------------------------------------------------
# Plan serialization
# ---------------------------------------------------------------------------


def plan_to_dict(solver: str, mission, emitter, metrics: dict) -> dict:
    return {
        "format": "coverage-routing-plan",
        "version": 1,
        "solver": solver,
        "mission_paths": [
            {"visits": [list(v) for v in p.visits], "cost": p.cost} for p in mission
        ],
        "emitter_paths": [
            {"stays": [list(s) for s in p.stays], "cost": p.cost} for p in emitter
        ],
        "metrics": metrics,
    }


def plan_from_dict(inst, data: dict) -> tuple[list[MissionPath], list[EmittingPath]]:
    mission = [
        MissionPath.build(inst, [tuple(v) for v in item["visits"]])
        for item in data["mission_paths"]
    ]
    emitter = [
        EmittingPath.build(inst, [tuple(s) for s in item["stays"]])
        for item in data["emitter_paths"]
    ]
    return mission, emitter


METRIC_COLUMNS = [
    "instance",
    "solver",
    "seed",
    "status",
    "objective",
    "lp_bound",
    "distance_ratio",
    "num_mission_vehicles",
    "num_emitter_vehicles",
    "num_coverage_locations",
    "min_emitters",
    "iterations",
    "columns_generated",
    "certified",
    "wall_time_s",
    "error",
]


def _metrics_row(**kwargs) -> dict:
    row = {col: "" for col in METRIC_COLUMNS}
    row.update(kwargs)
    return row


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    config = GeneratorConfig(
        num_jobs=args.jobs,
        num_clusters=args.clusters,
        cluster_radius=args.cluster_radius,
        coverage_radius=args.coverage_radius,
        mesh_spacing=args.mesh,
        area=args.area,
        horizon=args.horizon,
        mission_speed=args.mission_speed,
        emitter_speed=args.emitter_speed,
        seed=args.seed,
    )
    try:
        inst = instance_mod.generate(config)
    except instance_mod.InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    instance_mod.save(inst, args.out)
    print(
        f"wrote {args.out}: {inst.num_jobs} jobs in {args.clusters} clusters, "
        f"{inst.num_spots} coverage spots, horizon {inst.horizon}"
    )
    return EXIT_OK


def run_solver(
    inst,
    solver: str,
    warm_start: str = "partial",
    prune: list[str] | None = None,
    fleet_min: bool = False,
    max_iterations: int = 400,
    cap: int | None = None,
):
    """(mission, emitter, metrics dict, run_log) for one solver invocation."""
    t0 = time.perf_counter()
    run_log: list[dict] = []
    extra: dict = {}
    if solver == "dcg":
        prune = prune if prune is not None else ["input", "primal", "dual"]
        config = dcg_engine.DcgConfig(
            warm_start=warm_start,
            input_prune="input" in prune,
            primal_prune="primal" in prune,
            dual_prune="dual" in prune,
            max_iterations=max_iterations,
            cap_per_pricing=cap,
        )
        if fleet_min:
            min_v, result = dcg_engine.fleet_min_emitters(inst, config)
            extra["min_emitters"] = min_v
        else:
            result = dcg_engine.run(inst, config)
        mission, emitter = result.mission_plan, result.emitter_plan
        extra.update(
            lp_bound=result.lp_bound,
            iterations=result.iterations,
            columns_generated=result.columns_generated,
            certified=result.certified,
        )
        run_log = result.run_log
    else:
        fn = {
            "greedy": baselines.greedy,
            "emitting-follow": baselines.emitting_follow,
            "mission-emitting": baselines.mission_emitting,
            "fixed": baselines.fixed_emitters,
        }[solver]
        plan = fn(inst)
        mission, emitter = plan.mission_plan, plan.emitter_plan
        if solver == "fixed":
            extra["min_emitters"] = len(emitter)
    metrics = baselines.plan_metrics(inst, mission, emitter)
    metrics.update(extra)
    metrics["wall_time_s"] = round(time.perf_counter() - t0, 3)
    return mission, emitter, metrics, run_log


def cmd_solve(args) -> int:
    try:
        inst = instance_mod.load(args.instance)
    except instance_mod.InstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out) if args.out else Path(args.instance).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        mission, emitter, metrics, run_log = run_solver(
            inst,
            args.solver,
            warm_start=args.warm_start,
            prune=args.prune,
            fleet_min=args.fleet_min,
            max_iterations=args.max_iterations,
            cap=args.cap,
        )
    except (InfeasiblePlanError, RmpInfeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE

    report = dcg_engine.validate(inst, mission, emitter)
    stem = f"{Path(args.instance).stem}.{args.solver}"
    plan_path = out_dir / f"{stem}.plan.json"
    plan_path.write_text(
        json.dumps(plan_to_dict(args.solver, mission, emitter, metrics), indent=2)
        + "\n",
        encoding="utf-8",
    )
    metrics_path = out_dir / f"{stem}.metrics.csv"
    row = _metrics_row(
        instance=str(args.instance),
        solver=args.solver,
        status="ok" if report.ok else "invalid",
        objective=metrics["objective"],
        lp_bound=metrics.get("lp_bound", ""),
        distance_ratio=metrics["distance_ratio"],
        num_mission_vehicles=metrics["num_mission_vehicles"],
        num_emitter_vehicles=metrics["num_emitter_vehicles"],
        num_coverage_locations=metrics["num_coverage_locations"],
        min_emitters=metrics.get("min_emitters", ""),
        iterations=metrics.get("iterations", ""),
        columns_generated=metrics.get("columns_generated", ""),
        certified=metrics.get("certified", ""),
        wall_time_s=metrics["wall_time_s"],
    )
    with metrics_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS)
        writer.writeheader()
        writer.writerow(row)
    if run_log:
        log_path = out_dir / f"{stem}.runlog.jsonl"
        with log_path.open("w", encoding="utf-8") as fh:
            for entry in run_log:
                fh.write(json.dumps(entry) + "\n")
    print(
        f"{args.solver}: objective {metrics['objective']:.3f} "
        f"MV={metrics['num_mission_vehicles']} EV={metrics['num_emitter_vehicles']} "
        f"-> {plan_path}"
    )
    if not report.ok:
        print(f"validation failed: {report}", file=sys.stderr)
        return 1
    return EXIT_OK


def _experiment_cell(task: dict) -> dict:
    """One (grid cell, seed, solver) run; returns a raw metrics row."""
    config = GeneratorConfig(
        num_jobs=task["jobs"],
        num_clusters=task["clusters"],
        cluster_radius=task["cluster_radius"],
        coverage_radius=task["coverage_radius"],
        horizon=task["horizon"],
        seed=task["seed"],
    )
    label = (
        f"j{task['jobs']}_c{task['clusters']}_r{task['cluster_radius']:g}"
        f"_cov{task['coverage_radius']:g}_s{task['seed']}"
    )
    try:
        inst = instance_mod.generate(config)
        mission, emitter, metrics, _ = run_solver(
            inst,
            task["solver"],
            warm_start=task["warm_start"],
            fleet_min=task["fleet_min"],
        )
        report = dcg_engine.validate(inst, mission, emitter)
        return _metrics_row(
            instance=label,
            solver=task["solver"],
            seed=task["seed"],
            status="ok" if report.ok else "invalid",
            objective=metrics["objective"],
            lp_bound=metrics.get("lp_bound", ""),
            distance_ratio=metrics["distance_ratio"],
            num_mission_vehicles=metrics["num_mission_vehicles"],
            num_emitter_vehicles=metrics["num_emitter_vehicles"],
            num_coverage_locations=metrics["num_coverage_locations"],
            min_emitters=metrics.get("min_emitters", ""),
            iterations=metrics.get("iterations", ""),
            columns_generated=metrics.get("columns_generated", ""),
            certified=metrics.get("certified", ""),
            wall_time_s=metrics["wall_time_s"],
        )
    except Exception as exc:  # recorded per cell; the sweep continues
        return _metrics_row(
            instance=label,
            solver=task["solver"],
            seed=task["seed"],
            status="failed",
            error=f"{type(exc).__name__}: {exc}",
        )


def cmd_experiment(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for solver in solvers:
        if solver not in SOLVERS:
            print(f"error: unknown solver {solver!r}", file=sys.stderr)
            return EXIT_USAGE
    tasks = []
    for jobs in args.jobs:
        for clusters in args.clusters:
            for cradius in args.cluster_radius:
                for covradius in args.coverage_radius:
                    for seed in args.seeds:
                        for solver in solvers:
                            tasks.append(
                                {
                                    "jobs": jobs,
                                    "clusters": clusters,
                                    "cluster_radius": cradius,
                                    "coverage_radius": covradius,
                                    "seed": seed,
                                    "solver": solver,
                                    "warm_start": args.warm_start,
                                    "fleet_min": args.fleet_min,
                                    "horizon": args.horizon,
                                }
                            )
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_experiment_cell, tasks))
    else:
        rows = [_experiment_cell(task) for task in tasks]

    raw_path = out_dir / "raw.csv"
    with raw_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)

    # Aggregate means per (cell, solver) over seeds that succeeded.
    groups: dict[tuple, list[dict]] = {}
    for task, row in zip(tasks, rows):
        key = (
            task["jobs"],
            task["clusters"],
            task["cluster_radius"],
            task["coverage_radius"],
            task["solver"],
        )
        groups.setdefault(key, []).append(row)
    agg_cols = [
        "jobs",
        "clusters",
        "cluster_radius",
        "coverage_radius",
        "solver",
        "runs",
        "failures",
        "mean_objective",
        "mean_distance_ratio",
        "mean_mission_vehicles",
        "mean_emitter_vehicles",
        "mean_coverage_locations",
        "mean_min_emitters",
        "mean_wall_time_s",
    ]
    agg_path = out_dir / "aggregate.csv"
    with agg_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=agg_cols)
        writer.writeheader()
        for key in sorted(groups):
            rows_ok = [r for r in groups[key] if r["status"] == "ok"]
            n_fail = len(groups[key]) - len(rows_ok)

            def mean(col):
                vals = [float(r[col]) for r in rows_ok if r[col] != ""]
                return round(sum(vals) / len(vals), 4) if vals else ""

            writer.writerow(
                {
                    "jobs": key[0],
                    "clusters": key[1],
                    "cluster_radius": key[2],
                    "coverage_radius": key[3],
                    "solver": key[4],
                    "runs": len(groups[key]),
                    "failures": n_fail,
                    "mean_objective": mean("objective"),
                    "mean_distance_ratio": mean("distance_ratio"),
                    "mean_mission_vehicles": mean("num_mission_vehicles"),
                    "mean_emitter_vehicles": mean("num_emitter_vehicles"),
                    "mean_coverage_locations": mean("num_coverage_locations"),
                    "mean_min_emitters": mean("min_emitters"),
                    "mean_wall_time_s": mean("wall_time_s"),
                }
            )
    print(f"wrote {raw_path} ({len(rows)} rows) and {agg_path} ({len(groups)} cells)")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "experiment":
            return cmd_experiment(args)
    except KeyboardInterrupt:
        return 1
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
