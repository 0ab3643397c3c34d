"""Reference strategies and the fixed-emitter regime.

All strategies emit plans through the same path types and validator as
the joint engine, so their objectives and metrics are directly
comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import dcg_engine, lp_core
from .instance import Instance, InstanceError
from .rmp import EmittingPath, MissionPath, RmpInfeasible


class InfeasiblePlanError(RuntimeError):
    """A baseline could not produce a feasible plan; never silent."""


@dataclass
class BaselinePlan:
    strategy: str
    mission_plan: tuple[MissionPath, ...]
    emitter_plan: tuple[EmittingPath, ...]
    objective: float
    metrics: dict = field(default_factory=dict)


def plan_metrics(
    instance: Instance,
    mission_plan: Sequence[MissionPath],
    emitter_plan: Sequence[EmittingPath],
) -> dict:
    mission_dist = float(sum(p.cost for p in mission_plan))
    emitter_dist = float(sum(p.cost for p in emitter_plan))
    spots_visited = {s for p in emitter_plan for s in p.spots}
    return {
        "objective": mission_dist + emitter_dist,
        "mission_distance": mission_dist,
        "emitter_distance": emitter_dist,
        "distance_ratio": mission_dist / emitter_dist if emitter_dist > 0 else np.inf,
        "num_mission_vehicles": len(mission_plan),
        "num_emitter_vehicles": len(emitter_plan),
        "num_coverage_locations": len(spots_visited),
    }


def _finish(instance, strategy, mission, emitter) -> BaselinePlan:
    report = dcg_engine.validate(instance, mission, emitter)
    if not report.ok:
        raise InfeasiblePlanError(f"{strategy} produced an infeasible plan: {report}")
    metrics = plan_metrics(instance, mission, emitter)
    return BaselinePlan(
        strategy=strategy,
        mission_plan=tuple(mission),
        emitter_plan=tuple(emitter),
        objective=metrics["objective"],
        metrics=metrics,
    )


# ---------------------------------------------------------------------------
# Greedy
# ---------------------------------------------------------------------------


def greedy(instance: Instance, enforce_fleet: bool = True) -> BaselinePlan:
    """Nearest-feasible-job routes, one following emitter per route.

    Each vehicle pair repeatedly commits to the closest unserved job whose
    work fits its window after both vehicles can be in place; the paired
    emitter moves to the closest covering spot.  Work starts are delayed
    (waiting in transit) until the emitter has arrived.  Ties go to the
    lower job id.
    """
    remaining = [j.id for j in instance.jobs]
    mission_paths: list[MissionPath] = []
    emitter_paths: list[EmittingPath] = []

    while remaining:
        visits: list[tuple[int, int, int]] = []
        stays: list[tuple[int, int, int]] = []
        m_loc: int | None = None
        m_free = 0
        e_loc: int | None = None
        e_free = 0
        while True:
            best = None  # (mission_dist, job_id, work_start, spot)
            for job_id in remaining:
                job = instance.job(job_id)
                d_m = instance.mission_dist(m_loc, job_id)
                if best is not None and d_m >= best[0] - 1e-12:
                    continue
                arrive = m_free + instance.mission_tt(m_loc, job_id)
                w0 = max(arrive, job.window_start)
                spots = sorted(
                    instance.coverage_set(job_id),
                    key=lambda s: (instance.emitter_dist(e_loc, s), s),
                )
                for spot in spots:
                    e_arr = e_free + instance.emitter_tt(e_loc, spot)
                    w = max(w0, e_arr)
                    end = w + job.workload - 1
                    if end > job.window_end:
                        continue
                    if end + instance.emitter_tt(spot, None) > instance.horizon:
                        continue
                    best = (d_m, job_id, w, spot)
                    break
            if best is None:
                break
            _, job_id, w, spot = best
            job = instance.job(job_id)
            end = w + job.workload - 1
            visits.append((job_id, w, end))
            m_loc = job_id
            m_free = end + 1
            if stays and stays[-1][0] == spot:
                stays[-1] = (spot, stays[-1][1], end)
            else:
                stays.append((spot, w, end))
            e_loc = spot
            e_free = end + 1
            remaining.remove(job_id)
        if not visits:
            raise InfeasiblePlanError(
                f"greedy: no vehicle pair can serve remaining jobs {remaining}"
            )
        mission_paths.append(MissionPath.build(instance, visits))
        emitter_paths.append(EmittingPath.build(instance, stays))

    if enforce_fleet:
        if len(mission_paths) > instance.mission_fleet:
            raise InfeasiblePlanError(
                f"greedy needs {len(mission_paths)} mission vehicles, "
                f"fleet is {instance.mission_fleet}"
            )
        if len(emitter_paths) > instance.emitter_fleet:
            raise InfeasiblePlanError(
                f"greedy needs {len(emitter_paths)} emitting vehicles, "
                f"fleet is {instance.emitter_fleet}"
            )
    return _finish(instance, "greedy", mission_paths, emitter_paths)


# ---------------------------------------------------------------------------
# Following emitters for a fixed mission plan
# ---------------------------------------------------------------------------


def follow_emitters(
    instance: Instance, mission_plan: Sequence[MissionPath]
) -> list[EmittingPath]:
    """One emitter per mission route, chasing its fixed work schedule.

    Raises InstanceError when some work interval cannot be reached in
    time from the previous stop.
    """
    out = []
    for path in mission_plan:
        stays: list[tuple[int, int, int]] = []
        e_loc: int | None = None
        e_free = 0
        for job_id, w, end in path.visits:
            chosen = None
            for spot in sorted(
                instance.coverage_set(job_id),
                key=lambda s: (instance.emitter_dist(e_loc, s), s),
            ):
                if e_free + instance.emitter_tt(e_loc, spot) > w:
                    continue
                if end + instance.emitter_tt(spot, None) > instance.horizon:
                    continue
                chosen = spot
                break
            if chosen is None:
                raise InstanceError(
                    f"no covering spot reachable by step {w} for job {job_id}"
                )
            if stays and stays[-1][0] == chosen:
                stays[-1] = (chosen, stays[-1][1], end)
            else:
                stays.append((chosen, w, end))
            e_loc = chosen
            e_free = end + 1
        out.append(EmittingPath.build(instance, stays))
    return out


def _retime_route(
    instance: Instance, job_sequence: Sequence[int]
) -> tuple[MissionPath, EmittingPath]:
    """Joint schedule for a fixed job order, delaying work until the
    following emitter is in place."""
    visits: list[tuple[int, int, int]] = []
    stays: list[tuple[int, int, int]] = []
    m_loc: int | None = None
    m_free = 0
    e_loc: int | None = None
    e_free = 0
    for job_id in job_sequence:
        job = instance.job(job_id)
        w0 = max(m_free + instance.mission_tt(m_loc, job_id), job.window_start)
        chosen = None
        for spot in sorted(
            instance.coverage_set(job_id),
            key=lambda s: (instance.emitter_dist(e_loc, s), s),
        ):
            w = max(w0, e_free + instance.emitter_tt(e_loc, spot))
            end = w + job.workload - 1
            if end > job.window_end:
                continue
            if end + instance.emitter_tt(spot, None) > instance.horizon:
                continue
            chosen = (spot, w, end)
            break
        if chosen is None:
            raise InfeasiblePlanError(
                f"route {list(job_sequence)} cannot be covered at job {job_id}"
            )
        spot, w, end = chosen
        visits.append((job_id, w, end))
        m_loc = job_id
        m_free = end + 1
        if stays and stays[-1][0] == spot:
            stays[-1] = (spot, stays[-1][1], end)
        else:
            stays.append((spot, w, end))
        e_loc = spot
        e_free = end + 1
    return MissionPath.build(instance, visits), EmittingPath.build(instance, stays)


def _mission_stage(instance: Instance) -> dcg_engine.StageResult:
    seed = greedy(instance, enforce_fleet=False)
    return dcg_engine.mission_only_cg(instance, seed.mission_plan)


def emitting_follow(instance: Instance) -> BaselinePlan:
    """Mission-only optimum, then one emitter follows each route."""
    stage = _mission_stage(instance)
    missions: list[MissionPath] = []
    emitters: list[EmittingPath] = []
    for path in stage.plan_mission:
        try:
            emitters.extend(follow_emitters(instance, [path]))
            missions.append(path)
        except InstanceError:
            # Emitter cannot chase the early-completion schedule; re-time
            # the same job order with waiting in transit.
            mpath, epath = _retime_route(instance, path.jobs)
            missions.append(mpath)
            emitters.append(epath)
    return _finish(instance, "emitting-follow", missions, emitters)


def mission_emitting(instance: Instance) -> BaselinePlan:
    """Mission-only optimum, then emitter-only optimization to cover it."""
    stage = _mission_stage(instance)
    demand = [pair for path in stage.plan_mission for pair in path.work_pairs()]
    try:
        seeds = follow_emitters(instance, stage.plan_mission)
    except InstanceError:
        seeds = []
    try:
        estage = dcg_engine.emitter_only_cg(instance, demand, seed_paths=seeds)
    except RmpInfeasible as exc:
        raise InfeasiblePlanError(f"mission-emitting stage 2: {exc}") from exc
    return _finish(
        instance, "mission-emitting", list(stage.plan_mission), list(estage.plan_emitter)
    )


# ---------------------------------------------------------------------------
# Fixed (stationary) emitters
# ---------------------------------------------------------------------------


def fixed_emitters(instance: Instance) -> BaselinePlan:
    """Minimum stationary emitter placement, then mission-only routing
    restricted to the covered steps."""
    horizon = instance.horizon
    arrivals = {s.id: instance.emitter_tt(None, s.id) for s in instance.spots}
    latest_stay = {
        s.id: horizon - instance.emitter_tt(s.id, None) for s in instance.spots
    }

    def eligible(spot_id: int, job_id: int) -> bool:
        job = instance.job(job_id)
        earliest_work = max(
            job.window_start,
            instance.mission_tt(None, job_id),
            arrivals[spot_id],
        )
        return earliest_work + job.workload - 1 <= min(job.window_end, latest_stay[spot_id])

    cover_options: dict[int, list[int]] = {}
    for job in instance.jobs:
        options = [s for s in sorted(instance.coverage_set(job.id)) if eligible(s, job.id)]
        if not options:
            raise InfeasiblePlanError(
                f"fixed-emitter: job {job.id} has no reachable stationary cover"
            )
        cover_options[job.id] = options

    problem = lp_core.LpProblem(name="set_cover")
    var_of = {s.id: problem.add_var(obj=1.0, ub=1.0) for s in instance.spots}
    for job_id, options in cover_options.items():
        problem.add_row(lp_core.GEQ, 1.0, [(var_of[s], 1.0) for s in options])
    sol = lp_core.solve_binary(problem, list(var_of.values()))
    if sol.status != lp_core.OPTIMAL:
        raise InfeasiblePlanError("fixed-emitter set cover is infeasible")
    chosen = sorted(s for s, v in var_of.items() if sol.x[v] > 0.5)
    if len(chosen) > instance.emitter_fleet:
        raise InfeasiblePlanError(
            f"fixed-emitter placement needs {len(chosen)} emitters, "
            f"fleet is {instance.emitter_fleet}"
        )

    emitters = [
        EmittingPath.build(instance, [(s, arrivals[s], latest_stay[s])]) for s in chosen
    ]
    covered_steps: dict[int, list[int]] = {}
    covered_pairs: set[tuple[int, int]] = set()
    for path in emitters:
        covered_pairs |= path.coverage_pairs(instance)
    for job in instance.jobs:
        covered_steps[job.id] = sorted(
            t
            for t in range(job.window_start, job.window_end + 1)
            if (job.id, t) in covered_pairs
        )

    allowed_starts: dict[int, list[int]] = {}
    for job in instance.jobs:
        steps = set(covered_steps[job.id])
        tau = job.workload
        starts = [
            w
            for w in range(job.window_start, job.window_end - tau + 2)
            if all(w + k in steps for k in range(tau))
        ]
        if not starts:
            raise InfeasiblePlanError(
                f"fixed-emitter: job {job.id} has no fully covered work slot"
            )
        allowed_starts[job.id] = starts

    def allowed_start(job_id: int, earliest: int) -> int | None:
        for w in allowed_starts[job_id]:
            if w >= earliest:
                return w
        return None

    seeds = []
    for job in instance.jobs:
        w = allowed_start(job.id, max(job.window_start, instance.mission_tt(None, job.id)))
        if w is None:
            raise InfeasiblePlanError(
                f"fixed-emitter: job {job.id} unreachable within covered steps"
            )
        seeds.append(MissionPath.build(instance, [(job.id, w, w + job.workload - 1)]))
    stage = dcg_engine.mission_only_cg(instance, seeds, allowed_start=allowed_start)
    return _finish(instance, "fixed", list(stage.plan_mission), emitters)
