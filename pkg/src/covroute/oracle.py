"""Independent brute-force reference solvers for tiny instances.

- ``exhaustive_joint``: enumerates every mission routing (all job
  sequence partitions, all integer work-start schedules including late
  starts) and, per resulting coverage demand, finds the exact cheapest
  emitter plan by depth-limited route enumeration plus exact set cover.
  Deliberately shares no search code with the column generation engine.
- ``explicit_lp_value``: LP relaxation of the arc-based time-space
  formulation (flow balance, monotone start/end step variables, workload
  and coverage linking rows).
- ``full_set_partitioning_lp_value``: LP of the path formulation over the
  complete enumerated path pools, for tightness comparisons.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import lp_core, rmp as rmp_mod
from .instance import Instance
from .rmp import EmittingPath, MissionPath


class OracleError(ValueError):
    pass


MAX_JOBS = 5
MAX_SPOTS = 5
MAX_HORIZON = 20
EMITTER_DEPTH = 3


def _guard(instance: Instance, max_jobs=MAX_JOBS, max_spots=MAX_SPOTS, max_horizon=MAX_HORIZON):
    if instance.num_jobs > max_jobs:
        raise OracleError(f"oracle limited to {max_jobs} jobs, got {instance.num_jobs}")
    if instance.num_spots > max_spots:
        raise OracleError(f"oracle limited to {max_spots} spots, got {instance.num_spots}")
    if instance.horizon > max_horizon:
        raise OracleError(
            f"oracle limited to horizon {max_horizon}, got {instance.horizon}"
        )


@dataclass
class OracleResult:
    objective: float
    mission_plan: tuple[MissionPath, ...]
    emitter_plan: tuple[EmittingPath, ...]
    mission_plans_enumerated: int
    emitter_subproblems_solved: int
    explicit_lp_value: float | None = None


# ---------------------------------------------------------------------------
# Mission enumeration
# ---------------------------------------------------------------------------


def _sequence_partitions(items: tuple[int, ...]):
    """All ways to split ``items`` into disjoint ordered routes."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest) + 1):
        for subset in itertools.combinations(rest, k):
            remainder = tuple(x for x in rest if x not in subset)
            block = (first,) + subset
            for perm in itertools.permutations(block):
                for tail in _sequence_partitions(remainder):
                    yield [perm] + tail


def _route_schedules(instance: Instance, sequence: Sequence[int]):
    """Every integer work-start assignment along a fixed job order."""
    out: list[tuple[tuple[int, int, int], ...]] = []

    def rec(k: int, loc: int | None, free: int, acc: list):
        if k == len(sequence):
            out.append(tuple(acc))
            return
        job = instance.job(sequence[k])
        lo = max(free + instance.mission_tt(loc, job.id), job.window_start)
        hi = job.window_end - job.workload + 1
        for w in range(lo, hi + 1):
            acc.append((job.id, w, w + job.workload - 1))
            rec(k + 1, job.id, w + job.workload, acc)
            acc.pop()

    rec(0, None, 0, [])
    return out


def _route_cost(instance: Instance, sequence: Sequence[int]) -> float:
    cost = 0.0
    prev = None
    for job_id in sequence:
        cost += instance.mission_dist(prev, job_id)
        prev = job_id
    return cost + instance.mission_dist(prev, None)


# ---------------------------------------------------------------------------
# Exact emitter sub-solver for a fixed coverage demand
# ---------------------------------------------------------------------------


class _EmitterCoverSolver:
    def __init__(self, instance: Instance, depth: int):
        self.instance = instance
        self.depth = depth
        self.cache: dict[frozenset, tuple[float, tuple] | None] = {}
        self.subproblems = 0

    def solve(self, demand: frozenset[tuple[int, int]]):
        """(cost, stay routes) covering every demanded (job, step), or None."""
        if not demand:
            return (0.0, ())
        if demand in self.cache:
            return self.cache[demand]
        self.subproblems += 1
        result = self._solve_fresh(demand)
        self.cache[demand] = result
        return result

    def _solve_fresh(self, demand: frozenset[tuple[int, int]]):
        instance = self.instance
        bits = {pair: k for k, pair in enumerate(sorted(demand))}
        full_mask = (1 << len(bits)) - 1

        # Candidate stays per spot: contiguous runs of its demanded steps.
        stay_options: list[tuple[int, int, int, int]] = []  # spot, a, d, mask
        for spot in instance.spots:
            covered_jobs = instance.covering_jobs(spot.id)
            times = sorted({t for (i, t) in demand if i in covered_jobs})
            for a_idx in range(len(times)):
                for b_idx in range(a_idx, len(times)):
                    a, d = times[a_idx], times[b_idx]
                    mask = 0
                    for (i, t), k in bits.items():
                        if i in covered_jobs and a <= t <= d:
                            mask |= 1 << k
                    stay_options.append((spot.id, a, d, mask))

        # Depth-limited route enumeration; stays must add route-new coverage.
        routes: list[tuple[float, int, tuple]] = []  # cost, mask, stays

        def extend(loc, free, cost, mask, stays):
            if stays:
                total = cost + instance.emitter_dist(loc, None)
                routes.append((total, mask, tuple(stays)))
            if len(stays) >= self.depth:
                return
            for spot_id, a, d, smask in stay_options:
                if smask & ~mask == 0:
                    continue
                if a < free + instance.emitter_tt(loc, spot_id):
                    continue
                if d + instance.emitter_tt(spot_id, None) > instance.horizon:
                    continue
                stays.append((spot_id, a, d))
                extend(
                    spot_id,
                    d + 1,
                    cost + instance.emitter_dist(loc, spot_id),
                    mask | smask,
                    stays,
                )
                stays.pop()

        extend(None, 0, 0.0, 0, [])

        # Pareto filter: keep the cheapest route per coverage mask, drop
        # routes dominated by a superset-coverage cheaper route.
        best_by_mask: dict[int, tuple[float, tuple]] = {}
        for cost, mask, stays in routes:
            cur = best_by_mask.get(mask)
            if cur is None or cost < cur[0]:
                best_by_mask[mask] = (cost, stays)
        cands = sorted(
            (cost, mask, stays) for mask, (cost, stays) in best_by_mask.items()
        )
        filtered: list[tuple[float, int, tuple]] = []
        for cost, mask, stays in cands:
            # Cost-sorted: anything already kept is no more expensive, so a
            # kept superset-coverage route dominates this one.
            if any(mask & ~other_mask == 0 for _, other_mask, _ in filtered):
                continue
            filtered.append((cost, mask, stays))
        cands = filtered

        covers_bit: list[list[int]] = [[] for _ in range(len(bits))]
        for idx, (cost, mask, stays) in enumerate(cands):
            for k in range(len(bits)):
                if mask & (1 << k):
                    covers_bit[k].append(idx)
        for k in range(len(bits)):
            if not covers_bit[k]:
                return None

        best: list = [np.inf, None]
        max_routes = self.instance.emitter_fleet
        seen_states: dict[tuple[int, int], float] = {}

        def cover(remaining: int, used: int, cost: float, chosen: list):
            if cost >= best[0] - 1e-12:
                return
            if remaining == 0:
                best[0] = cost
                best[1] = tuple(chosen)
                return
            if used >= max_routes:
                return
            state = (remaining, used)
            prev = seen_states.get(state)
            if prev is not None and prev <= cost + 1e-12:
                return
            seen_states[state] = cost
            lowest = (remaining & -remaining).bit_length() - 1
            for idx in covers_bit[lowest]:
                rcost, rmask, rstays = cands[idx]
                chosen.append(idx)
                cover(remaining & ~rmask, used + 1, cost + rcost, chosen)
                chosen.pop()

        cover(full_mask, 0, 0.0, [])
        if best[1] is None:
            return None
        chosen_routes = tuple(cands[idx][2] for idx in best[1])
        return (float(best[0]), chosen_routes)


# ---------------------------------------------------------------------------
# Joint exhaustive optimum
# ---------------------------------------------------------------------------


def exhaustive_joint(
    instance: Instance,
    emitter_depth: int = EMITTER_DEPTH,
) -> OracleResult:
    """True joint optimum by enumeration (tiny instances only)."""
    _guard(instance)
    job_ids = tuple(j.id for j in instance.jobs)
    solver = _EmitterCoverSolver(instance, emitter_depth)

    structures = []
    for parts in _sequence_partitions(job_ids):
        if len(parts) > instance.mission_fleet:
            continue
        cost = sum(_route_cost(instance, seq) for seq in parts)
        structures.append((cost, parts))
    structures.sort(key=lambda pair: pair[0])

    best_obj = np.inf
    best_mission: tuple[MissionPath, ...] | None = None
    best_emitter: tuple[EmittingPath, ...] | None = None
    plans = 0

    for mission_cost, parts in structures:
        if mission_cost >= best_obj - 1e-12:
            break  # structures are cost-sorted; emitters only add cost
        schedule_lists = [_route_schedules(instance, seq) for seq in parts]
        if any(not lst for lst in schedule_lists):
            continue
        for combo in itertools.product(*schedule_lists):
            plans += 1
            demand = frozenset(
                (i, t) for visits in combo for (i, w, e) in visits for t in range(w, e + 1)
            )
            solved = solver.solve(demand)
            if solved is None:
                continue
            emitter_cost, routes = solved
            total = mission_cost + emitter_cost
            if total < best_obj - 1e-12:
                best_obj = total
                best_mission = tuple(
                    MissionPath.build(instance, visits) for visits in combo
                )
                best_emitter = tuple(
                    EmittingPath.build(instance, stays) for stays in routes
                )

    if best_mission is None:
        raise OracleError("no feasible joint plan exists within the oracle limits")
    return OracleResult(
        objective=float(best_obj),
        mission_plan=best_mission,
        emitter_plan=best_emitter,
        mission_plans_enumerated=plans,
        emitter_subproblems_solved=solver.subproblems,
    )


# ---------------------------------------------------------------------------
# Full path enumeration (set-partitioning tightness tests)
# ---------------------------------------------------------------------------


def enumerate_all_mission_paths(instance: Instance, limit: int = 200_000) -> list[MissionPath]:
    """Complete mission path set: all job orders and all work schedules."""
    _guard(instance)
    out: list[MissionPath] = []
    job_ids = [j.id for j in instance.jobs]

    def rec(loc, free, used: set, acc: list):
        if acc:
            out.append(MissionPath.build(instance, list(acc)))
            if len(out) > limit:
                raise OracleError("mission path enumeration exceeded limit")
        for job_id in job_ids:
            if job_id in used:
                continue
            job = instance.job(job_id)
            lo = max(free + instance.mission_tt(loc, job_id), job.window_start)
            hi = job.window_end - job.workload + 1
            for w in range(lo, hi + 1):
                acc.append((job_id, w, w + job.workload - 1))
                used.add(job_id)
                rec(job_id, w + job.workload, used, acc)
                used.remove(job_id)
                acc.pop()

    rec(None, 0, set(), [])
    return out


def enumerate_all_emitter_paths(
    instance: Instance, depth: int | None = None, limit: int = 400_000
) -> list[EmittingPath]:
    """Emitter paths over every stay interval, up to ``depth`` stays."""
    _guard(instance)
    if depth is None:
        depth = min(EMITTER_DEPTH, max(instance.num_jobs, 1))
    horizon = instance.horizon
    out: list[EmittingPath] = []

    def rec(loc, free, acc: list):
        if acc:
            out.append(EmittingPath.build(instance, list(acc)))
            if len(out) > limit:
                raise OracleError("emitter path enumeration exceeded limit")
        if len(acc) >= depth:
            return
        for spot in instance.spots:
            earliest = free + instance.emitter_tt(loc, spot.id)
            latest = horizon - instance.emitter_tt(spot.id, None)
            for a in range(earliest, latest + 1):
                for d in range(a, latest + 1):
                    acc.append((spot.id, a, d))
                    rec(spot.id, d + 1, acc)
                    acc.pop()

    rec(None, 0, [])
    return out


def full_set_partitioning_lp_value(instance: Instance, depth: int | None = None) -> float:
    """LP value of the path formulation over fully enumerated pools."""
    missions = enumerate_all_mission_paths(instance)
    emitters = enumerate_all_emitter_paths(instance, depth=depth)
    solution = rmp_mod.build_and_solve(instance, missions, emitters, integral=False)
    return float(solution.objective)


# ---------------------------------------------------------------------------
# Explicit arc-based LP relaxation
# ---------------------------------------------------------------------------


def explicit_lp_value(instance: Instance) -> float:
    """LP relaxation value of the arc-based time-space formulation.

    Vehicles are indexed explicitly; waiting happens in place at any node
    (idle arcs), so travel arcs exist only at exact departure steps.
    Start/end step variables follow the monotone by-time encoding: work is
    in progress at step t while started(t) - ended(t) = 1.
    """
    _guard(instance)
    problem = lp_core.LpProblem(name="explicit")
    T = instance.horizon
    steps = range(T + 1)
    U = instance.mission_fleet
    V = instance.emitter_fleet

    def build_network(locations, dist, tt):
        """Arcs for one vehicle copy over its location set."""
        arcs = []  # (kind, src, dst, cost); nodes are (loc, t) with t <= T+1
        for loc in locations:
            t0 = tt(None, loc)
            if t0 <= T:
                arcs.append(("enter", None, (loc, t0), dist(None, loc)))
            for t in steps:
                if t + 1 <= T + 1:
                    arcs.append(("idle", (loc, t), (loc, t + 1), 0.0))
            for t in range(T + 2):  # includes the end-of-horizon node
                if t + tt(loc, None) <= T + 1:
                    arcs.append(("leave", (loc, t), None, dist(loc, None)))
            for other in locations:
                if other == loc:
                    continue
                for t in steps:
                    arr = t + tt(loc, other)
                    if arr <= T:
                        arcs.append(("move", (loc, t), (other, arr), dist(loc, other)))
        arcs.append(("null", None, None, 0.0))
        return arcs

    job_ids = [j.id for j in instance.jobs]
    spot_ids = [s.id for s in instance.spots]
    mission_arcs = build_network(job_ids, instance.mission_dist, instance.mission_tt)
    emitter_arcs = build_network(spot_ids, instance.emitter_dist, instance.emitter_tt)

    def add_vehicle(arcs):
        arc_vars = {}
        for idx, (kind, src, dst, cost) in enumerate(arcs):
            arc_vars[idx] = problem.add_var(obj=cost, ub=1.0)
        # one departure from, and one return to, the depot
        dep = [
            (arc_vars[i], 1.0)
            for i, (k, s, d, _) in enumerate(arcs)
            if s is None
        ]
        ret = [
            (arc_vars[i], 1.0)
            for i, (k, s, d, _) in enumerate(arcs)
            if d is None
        ]
        problem.add_row(lp_core.EQ, 1.0, dep)
        problem.add_row(lp_core.EQ, 1.0, ret)
        # flow conservation at every location-time node
        touched = {}
        for i, (k, s, d, _) in enumerate(arcs):
            if s is not None:
                touched.setdefault(s, []).append((arc_vars[i], -1.0))
            if d is not None:
                touched.setdefault(d, []).append((arc_vars[i], 1.0))
        for node, terms in touched.items():
            problem.add_row(lp_core.EQ, 0.0, terms)
        return arc_vars

    mission_vehicle_vars = [add_vehicle(mission_arcs) for _ in range(U)]
    emitter_vehicle_vars = [add_vehicle(emitter_arcs) for _ in range(V)]

    # Each job location is entered exactly once across the mission fleet.
    for job_id in job_ids:
        coeffs = []
        for arc_vars in mission_vehicle_vars:
            for i, (k, s, d, _) in enumerate(mission_arcs):
                if k in ("enter", "move") and d is not None and d[0] == job_id:
                    coeffs.append((arc_vars[i], 1.0))
        problem.add_row(lp_core.EQ, 1.0, coeffs)

    # Monotone start/end step variables.
    y_start = {}
    y_end = {}
    for job in instance.jobs:
        for t in steps:
            lb = 0.0
            ub = 1.0
            if t < job.window_start:
                ub = 0.0  # cannot have started before the window opens
            ys = problem.add_var(obj=0.0, lb=lb, ub=ub)
            y_start[(job.id, t)] = ys
        for t in steps:
            lb = 1.0 if t > job.window_end else 0.0  # ended once the window closed
            ye = problem.add_var(obj=0.0, lb=lb, ub=1.0)
            y_end[(job.id, t)] = ye
        for t in range(T):
            problem.add_row(
                lp_core.LEQ,
                0.0,
                [(y_start[(job.id, t)], 1.0), (y_start[(job.id, t + 1)], -1.0)],
            )
            problem.add_row(
                lp_core.LEQ,
                0.0,
                [(y_end[(job.id, t)], 1.0), (y_end[(job.id, t + 1)], -1.0)],
            )
        problem.add_row(
            lp_core.GEQ,
            float(job.workload),
            [(y_start[(job.id, t)], 1.0) for t in steps]
            + [(y_end[(job.id, t)], -1.0) for t in steps],
        )

    # Work requires an idle mission vehicle at the job...
    mission_idle = {}
    for i, (k, s, d, _) in enumerate(mission_arcs):
        if k == "idle":
            mission_idle.setdefault((s[0], s[1]), []).append(i)
    emitter_idle = {}
    for i, (k, s, d, _) in enumerate(emitter_arcs):
        if k == "idle":
            emitter_idle.setdefault((s[0], s[1]), []).append(i)

    for job in instance.jobs:
        for t in steps:
            presence = []
            for arc_vars in mission_vehicle_vars:
                for i in mission_idle.get((job.id, t), []):
                    presence.append((arc_vars[i], -1.0))
            problem.add_row(
                lp_core.LEQ,
                0.0,
                [(y_start[(job.id, t)], 1.0), (y_end[(job.id, t)], -1.0)] + presence,
            )
            # ... and an emitting vehicle at a covering spot.
            coverage = []
            for arc_vars in emitter_vehicle_vars:
                for spot_id in instance.coverage_set(job.id):
                    for i in emitter_idle.get((spot_id, t), []):
                        coverage.append((arc_vars[i], -1.0))
            problem.add_row(
                lp_core.LEQ,
                0.0,
                [(y_start[(job.id, t)], 1.0), (y_end[(job.id, t)], -1.0)] + coverage,
            )

    solution = lp_core.solve_lp(problem)
    if solution.status != lp_core.OPTIMAL:
        raise OracleError(f"explicit LP relaxation is {solution.status}")
    return float(solution.objective)
