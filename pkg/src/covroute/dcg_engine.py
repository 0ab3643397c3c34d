"""Double column generation orchestration.

Alternates between the restricted master problem and the two pricing
problems until neither returns an improving column with heuristic pruning
disabled, then restores integrality via stem-and-blender pool
augmentation followed by one binary master solve.

Also hosts the mission-only and emitter-only column generation used by
warm starts and baselines, the joint-plan validator, and the emitter
fleet-minimization mode.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import lp_core, pricing_emitting, pricing_mission
from .instance import Instance, InstanceError
from .rmp import (
    DualPrices,
    EmittingPath,
    MissionPath,
    RmpBuilder,
    RmpInfeasible,
    RmpSolution,
    WEIGHT_TOL,
    reduced_cost_emitter,
    reduced_cost_mission,
)


class EngineError(RuntimeError):
    pass


@dataclass
class DcgConfig:
    epsilon: float = 1e-6
    cap_per_pricing: int | None = None  # None: keep every negative column
    max_iterations: int = 400
    heuristic_phase_fraction: float = 0.6
    warm_start: str = "partial"  # none | partial | full
    input_prune: bool = True
    primal_prune: bool = True
    dual_prune: bool = True
    sb_max_paths: int = 1500  # per stem set
    coverage_penalty: float | None = None  # fleet-min probing only
    seed: int = 0  # recorded in logs; the engine itself is deterministic

    def heuristic_iterations(self) -> int:
        return int(round(self.heuristic_phase_fraction * self.max_iterations))


@dataclass
class FeasibilityReport:
    violations: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, detail: str) -> None:
        self.violations.append((kind, detail))

    def __str__(self) -> str:
        if self.ok:
            return "feasible"
        return "; ".join(f"{kind}: {detail}" for kind, detail in self.violations)


@dataclass
class DcgResult:
    mission_plan: tuple[MissionPath, ...]
    emitter_plan: tuple[EmittingPath, ...]
    objective: float
    lp_bound: float
    iterations: int
    columns_generated: int
    timings: dict[str, float]
    fractional_before: int
    fractional_after: int
    certified: bool
    final_mission_rc: float
    final_emitter_rc: float
    run_log: list[dict]
    validation: FeasibilityReport
    penalty_used: float = 0.0
    warm_start: str = "none"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate(
    instance: Instance,
    mission_plan: Iterable[MissionPath],
    emitter_plan: Iterable[EmittingPath],
) -> FeasibilityReport:
    """Feasibility report for a joint plan: path invariants, partition,
    fleet caps, and per-step coverage of all work in progress."""
    report = FeasibilityReport()
    mission_plan = list(mission_plan)
    emitter_plan = list(emitter_plan)

    for path in mission_plan:
        try:
            path.validate(instance)
        except InstanceError as exc:
            report.add("mission_path", str(exc))
    for path in emitter_plan:
        try:
            path.validate(instance)
        except InstanceError as exc:
            report.add("emitter_path", str(exc))

    counts: dict[int, int] = {j.id: 0 for j in instance.jobs}
    for path in mission_plan:
        for job_id in path.jobs:
            if job_id in counts:
                counts[job_id] += 1
    for job_id, c in counts.items():
        if c == 0:
            report.add("partition_missing", f"job {job_id} never visited")
        elif c > 1:
            report.add("partition_duplicate", f"job {job_id} visited {c} times")

    if len(mission_plan) > instance.mission_fleet:
        report.add(
            "fleet_mission",
            f"{len(mission_plan)} mission paths > fleet {instance.mission_fleet}",
        )
    if len(emitter_plan) > instance.emitter_fleet:
        report.add(
            "fleet_emitter",
            f"{len(emitter_plan)} emitter paths > fleet {instance.emitter_fleet}",
        )

    covered: set[tuple[int, int]] = set()
    for path in emitter_plan:
        covered |= path.coverage_pairs(instance)
    for path in mission_plan:
        for pair in path.work_pairs():
            if pair not in covered:
                report.add(
                    "coverage_gap",
                    f"job {pair[0]} working at step {pair[1]} without coverage",
                )
    return report


# ---------------------------------------------------------------------------
# Stem-and-blender
# ---------------------------------------------------------------------------


def stems_and_blenders(
    sequences: Sequence[Sequence[int]],
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Shared prefixes of fractional routes and their continuation sets.

    Routes are grouped by first location; each group's stem is the longest
    common prefix, and its blender collects every location appearing after
    the stem in any member.
    """
    groups: dict[int, list[tuple[int, ...]]] = {}
    for seq in sequences:
        seq = tuple(seq)
        if seq:
            groups.setdefault(seq[0], []).append(seq)
    out = []
    for first in sorted(groups):
        members = groups[first]
        stem = members[0]
        for other in members[1:]:
            k = 0
            while k < len(stem) and k < len(other) and stem[k] == other[k]:
                k += 1
            stem = stem[:k]
        blender: set[int] = set()
        for member in members:
            blender.update(member[len(stem) :])
        out.append((tuple(stem), tuple(sorted(blender))))
    return out


def stem_and_blender(
    instance: Instance,
    builder: RmpBuilder,
    solution: RmpSolution,
    duals: DualPrices,
    windows: pricing_emitting.TimeWindows,
    max_paths_per_stem: int = 4000,
) -> int:
    """Augment the pools with perturbations of the fractional routes.

    Emitter regeneration additionally uses entry/exit candidates from the
    incumbent work intervals, and every mission path in the fractional
    support gets a chasing one-emitter column, so the binary solve can
    always complete whatever mission selection it makes.
    """
    from . import baselines

    frac_mission, frac_emitter = solution.fractional_paths()
    added = 0
    support = [p for p, w in solution.mission_weights.items() if w > WEIGHT_TOL]
    windows = pricing_emitting.merge_windows(
        windows, pricing_emitting.primal_windows(instance, solution)
    )
    for path in support:
        try:
            for ep in baselines.follow_emitters(instance, [path]):
                added += builder.add_emitter(ep)
                builder.add_emitter(pricing_emitting.inflate_stays(instance, ep))
        except InstanceError:
            pass
    budget = 4 * max_paths_per_stem  # bound on regenerated columns per side
    remaining = budget
    for stem, blender in stems_and_blenders([p.jobs for p in frac_mission]):
        if remaining <= 0:
            break
        paths = pricing_mission.price_mission(
            instance,
            duals,
            prefix_jobs=stem,
            restrict_jobs=blender,
            harvest_all=True,
            dominance=False,  # keep alternative routes, not just cheapest
            max_paths=min(max_paths_per_stem, remaining),
        )
        for path in paths:
            added += builder.add_mission(path)
        remaining -= len(paths)
    remaining = budget
    for stem, blender in stems_and_blenders([p.spots for p in frac_emitter]):
        if remaining <= 0:
            break
        paths = pricing_emitting.price_emitting(
            instance,
            duals,
            windows,
            dual_prune=False,
            allow_zero_reward_stays=True,
            prefix_spots=stem,
            restrict_spots=set(blender) | set(stem),
            harvest_all=True,
            dominance=False,
            max_paths=min(max_paths_per_stem, remaining),
        )
        for path in paths:
            added += builder.add_emitter(path)
            builder.add_emitter(pricing_emitting.inflate_stays(instance, path))
        remaining -= len(paths)
    return added


# ---------------------------------------------------------------------------
# Mission-only column generation (no coverage linking)
# ---------------------------------------------------------------------------


@dataclass
class StageResult:
    plan_mission: tuple[MissionPath, ...]
    plan_emitter: tuple[EmittingPath, ...]
    objective: float
    lp_bound: float
    # columns considered during column generation proper (seeds + priced);
    # excludes the regeneration columns added only to restore integrality
    generated_mission: list[MissionPath]
    generated_emitter: list[EmittingPath]
    iterations: int


class _MissionOnlyMaster:
    """Partition + fleet rows only; used for mission-only CG."""

    def __init__(self, instance: Instance, allowed_start=None):
        self.instance = instance
        self.problem = lp_core.LpProblem(name="mission_only")
        self.partition_row = {}
        for job in instance.jobs:
            self.partition_row[job.id] = self.problem.add_row(lp_core.EQ, 1.0)
        self.fleet_row = self.problem.add_row(
            lp_core.LEQ, float(instance.mission_fleet)
        )
        self.paths: list[MissionPath] = []
        self._vars: dict[MissionPath, int] = {}
        self._basis = None

    def add(self, path: MissionPath) -> bool:
        if path in self._vars:
            return False
        var = self.problem.add_var(obj=path.cost)
        for job_id in path.jobs:
            self.problem.set_entry(self.partition_row[job_id], var, 1.0)
        self.problem.set_entry(self.fleet_row, var, 1.0)
        self.paths.append(path)
        self._vars[path] = var
        return True

    def solve_lp(self):
        sol = lp_core.solve_lp(self.problem, warm=self._basis)
        if sol.status != lp_core.OPTIMAL:
            raise RmpInfeasible(
                f"mission-only master {sol.status}", "partition"
            )
        self._basis = sol.basis
        return sol

    def duals_of(self, sol) -> DualPrices:
        y = sol.duals
        pi = {j.id: float(y[self.partition_row[j.id]]) for j in self.instance.jobs}
        rho = max(-float(y[self.fleet_row]), 0.0) + 0.0
        return DualPrices(pi=pi, rho=rho, beta=0.0, xi={})

    def weights(self, sol) -> dict[MissionPath, float]:
        return {p: float(sol.x[self._vars[p]]) for p in self.paths}

    def solve_integral(self) -> tuple[list[MissionPath], float]:
        sol = lp_core.solve_binary(self.problem, range(self.problem.num_vars))
        if sol.status != lp_core.OPTIMAL:
            raise RmpInfeasible(f"mission-only integer {sol.status}", "partition")
        chosen = [p for p in self.paths if sol.x[self._vars[p]] > 0.5]
        return chosen, float(sol.objective)


def mission_only_cg(
    instance: Instance,
    seed_paths: Iterable[MissionPath],
    epsilon: float = 1e-6,
    cap: int | None = None,
    max_iterations: int = 300,
    allowed_start: Callable[[int, int], int | None] | None = None,
    sb_max_paths: int = 4000,
) -> StageResult:
    """VRPTW-style mission optimization ignoring coverage."""
    master = _MissionOnlyMaster(instance)
    seeds = list(seed_paths)
    for path in seeds:
        master.add(path)
    if not master.paths:
        raise RmpInfeasible("mission-only CG needs at least one seed path", "partition")
    iterations = 0
    lp_obj = np.inf
    last_sol = None
    while iterations < max_iterations:
        iterations += 1
        sol = master.solve_lp()
        last_sol = sol
        lp_obj = float(sol.objective)
        duals = master.duals_of(sol)
        cols = pricing_mission.price_mission(
            instance, duals, cap=cap, epsilon=epsilon, allowed_start=allowed_start
        )
        added = 0
        for path in cols:
            added += master.add(path)
        if added == 0:
            break
    cg_columns = list(master.paths)
    # Integrality restoration on the mission pool.
    weights = master.weights(last_sol)
    frac = [p for p, w in weights.items() if WEIGHT_TOL < w < 1 - WEIGHT_TOL]
    duals = master.duals_of(last_sol)
    for stem, blender in stems_and_blenders([p.jobs for p in frac]):
        for path in pricing_mission.price_mission(
            instance,
            duals,
            prefix_jobs=stem,
            restrict_jobs=blender,
            harvest_all=True,
            dominance=False,
            allowed_start=allowed_start,
            max_paths=sb_max_paths,
        ):
            master.add(path)
    chosen, obj = master.solve_integral()
    return StageResult(
        plan_mission=tuple(chosen),
        plan_emitter=(),
        objective=obj,
        lp_bound=lp_obj,
        generated_mission=cg_columns,
        generated_emitter=[],
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# Emitter-only column generation against fixed work intervals
# ---------------------------------------------------------------------------


class _EmitterOnlyMaster:
    """Cover rows (one per demanded (job, step)) + fleet row.

    Each cover row carries a penalty variable so the master stays feasible
    while columns are generated; a positive penalty in the final solution
    means the demand cannot be covered within the fleet.
    """

    def __init__(self, instance: Instance, demand: Sequence[tuple[int, int]], penalty: float):
        self.instance = instance
        self.demand = list(dict.fromkeys(demand))
        self.problem = lp_core.LpProblem(name="emitter_only")
        self.cover_row = {}
        self.penalty_vars = []
        for pair in self.demand:
            row = self.problem.add_row(lp_core.GEQ, 1.0)
            self.cover_row[pair] = row
            pvar = self.problem.add_var(obj=penalty)
            self.problem.set_entry(row, pvar, 1.0)
            self.penalty_vars.append(pvar)
        self.fleet_row = self.problem.add_row(
            lp_core.LEQ, float(instance.emitter_fleet)
        )
        self.paths: list[EmittingPath] = []
        self._vars: dict[EmittingPath, int] = {}
        self._basis = None

    def add(self, path: EmittingPath) -> bool:
        if path in self._vars:
            return False
        var = self.problem.add_var(obj=path.cost)
        hits = 0
        for pair in path.coverage_pairs(self.instance):
            row = self.cover_row.get(pair)
            if row is not None:
                self.problem.set_entry(row, var, 1.0)
                hits += 1
        if hits == 0:
            # Useless column for this demand; still register to keep the
            # dedupe contract, but it can never enter a cover row.
            pass
        self.problem.set_entry(self.fleet_row, var, 1.0)
        self.paths.append(path)
        self._vars[path] = var
        return True

    def solve_lp(self):
        sol = lp_core.solve_lp(self.problem, warm=self._basis)
        if sol.status != lp_core.OPTIMAL:
            raise RmpInfeasible(f"emitter-only master {sol.status}", "linking")
        self._basis = sol.basis
        return sol

    def duals_of(self, sol) -> DualPrices:
        y = sol.duals
        xi = {}
        for pair, row in self.cover_row.items():
            v = float(y[row])
            if v > 1e-12:
                xi[pair] = v
        beta = max(-float(y[self.fleet_row]), 0.0) + 0.0
        pi = {j.id: 0.0 for j in self.instance.jobs}
        return DualPrices(pi=pi, rho=0.0, beta=beta, xi=xi)

    def weights(self, sol) -> dict[EmittingPath, float]:
        return {p: float(sol.x[self._vars[p]]) for p in self.paths}

    def solve_integral(self) -> tuple[list[EmittingPath], float, float]:
        binaries = list(self._vars.values())
        sol = lp_core.solve_binary(self.problem, binaries)
        if sol.status != lp_core.OPTIMAL:
            raise RmpInfeasible(f"emitter-only integer {sol.status}", "linking")
        chosen = [p for p in self.paths if sol.x[self._vars[p]] > 0.5]
        penalty = float(sum(sol.x[v] for v in self.penalty_vars))
        cost = float(sum(p.cost for p in chosen))
        return chosen, cost, penalty


def coverage_penalty_scale(instance: Instance) -> float:
    diag = float(np.hypot(*instance.area))
    return 100.0 * max(diag, 1.0)


def emitter_only_cg(
    instance: Instance,
    demand: Sequence[tuple[int, int]],
    seed_paths: Iterable[EmittingPath] = (),
    epsilon: float = 1e-6,
    cap: int | None = None,
    max_iterations: int = 300,
    dual_prune: bool = True,
    sb_max_paths: int = 4000,
) -> StageResult:
    """Cover the given worked (job, step) pairs at minimum emitter distance.

    Raises RmpInfeasible when the demand cannot be covered (detected via
    residual penalty in the final integer solution).
    """
    penalty = coverage_penalty_scale(instance)
    master = _EmitterOnlyMaster(instance, demand, penalty)
    for path in seed_paths:
        master.add(path)
        master.add(pricing_emitting.inflate_stays(instance, path))
    demand_intervals: dict[int, list[tuple[int, int]]] = {}
    for i, t in sorted(set(demand)):
        runs = demand_intervals.setdefault(i, [])
        if runs and runs[-1][1] == t - 1:
            runs[-1] = (runs[-1][0], t)
        else:
            runs.append((t, t))
    windows = pricing_emitting.merge_windows(
        pricing_emitting.input_based_windows(instance),
        pricing_emitting.windows_from_job_intervals(instance, demand_intervals),
    )
    iterations = 0
    lp_obj = np.inf
    last_sol = None
    while iterations < max_iterations:
        iterations += 1
        sol = master.solve_lp()
        last_sol = sol
        lp_obj = float(sol.objective)
        duals = master.duals_of(sol)
        cols = pricing_emitting.price_emitting(
            instance, duals, windows, cap=cap, epsilon=epsilon, dual_prune=dual_prune
        )
        added = 0
        for path in cols:
            added += master.add(path)
            master.add(pricing_emitting.inflate_stays(instance, path))
        if added == 0:
            break
    cg_columns = list(master.paths)
    weights = master.weights(last_sol)
    frac = [p for p, w in weights.items() if WEIGHT_TOL < w < 1 - WEIGHT_TOL]
    duals = master.duals_of(last_sol)
    for stem, blender in stems_and_blenders([p.spots for p in frac]):
        for path in pricing_emitting.price_emitting(
            instance,
            duals,
            windows,
            dual_prune=False,
            allow_zero_reward_stays=True,
            prefix_spots=stem,
            restrict_spots=set(blender) | set(stem),
            harvest_all=True,
            dominance=False,
            max_paths=sb_max_paths,
        ):
            master.add(path)
            master.add(pricing_emitting.inflate_stays(instance, path))
    chosen, cost, residual = master.solve_integral()
    if residual > 1e-6:
        raise RmpInfeasible(
            f"demand cannot be covered by {instance.emitter_fleet} emitters "
            f"(residual penalty {residual:.3g})",
            "linking",
        )
    return StageResult(
        plan_mission=(),
        plan_emitter=tuple(chosen),
        objective=cost,
        lp_bound=lp_obj,
        generated_mission=[],
        generated_emitter=cg_columns,
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# Warm starts
# ---------------------------------------------------------------------------


def warm_start(
    instance: Instance, mode: str, config: DcgConfig | None = None
) -> tuple[list[MissionPath], list[EmittingPath]]:
    """Initial pools.  Greedy columns are always included so the master
    (and the final integer solve) starts from an integer-feasible pool."""
    from . import baselines  # local import; baselines builds on this module

    config = config or DcgConfig()
    if mode not in ("none", "partial", "full"):
        raise EngineError(f"unknown warm start mode {mode!r}")
    # Fleet caps are enforced by the master problem rows, not the seed pool.
    plan = baselines.greedy(instance, enforce_fleet=False)
    mission_pool = list(plan.mission_plan)
    emitter_pool = list(plan.emitter_plan)
    emitter_pool.extend(
        pricing_emitting.inflate_stays(instance, p) for p in plan.emitter_plan
    )
    if mode in ("partial", "full"):
        stage = mission_only_cg(
            instance, mission_pool, epsilon=config.epsilon, cap=config.cap_per_pricing
        )
        mission_pool.extend(stage.generated_mission)
        if mode == "full":
            demand = [
                pair for path in stage.plan_mission for pair in path.work_pairs()
            ]
            try:
                follow = baselines.follow_emitters(instance, stage.plan_mission)
            except InstanceError:
                follow = []
            try:
                estage = emitter_only_cg(
                    instance,
                    demand,
                    seed_paths=follow,
                    epsilon=config.epsilon,
                    cap=config.cap_per_pricing,
                    dual_prune=config.dual_prune,
                )
                emitter_pool.extend(estage.generated_emitter)
                emitter_pool.extend(estage.plan_emitter)
            except RmpInfeasible:
                # Fixed mission-only schedule not coverable; the joint run
                # will price emitters from scratch instead.
                emitter_pool.extend(follow)
    return _dedupe(mission_pool), _dedupe(emitter_pool)


def _dedupe(paths: list) -> list:
    seen = set()
    out = []
    for p in paths:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# Full double column generation
# ---------------------------------------------------------------------------


def run(instance: Instance, config: DcgConfig | None = None) -> DcgResult:
    config = config or DcgConfig()
    timings: dict[str, float] = {}
    run_log: list[dict] = []

    t0 = time.perf_counter()
    mission_pool, emitter_pool = warm_start(instance, config.warm_start, config)
    timings["warm_start"] = time.perf_counter() - t0

    builder = RmpBuilder(instance)
    if config.coverage_penalty is not None:
        _add_coverage_penalties(builder, config.coverage_penalty)
    for path in mission_pool:
        builder.add_mission(path)
    for path in emitter_pool:
        builder.add_emitter(path)
    greedy_mission, greedy_emitter = _greedy_incumbent(instance)
    if greedy_mission is not None:
        builder.set_incumbent(greedy_mission, greedy_emitter)

    if config.input_prune:
        exact_windows = pricing_emitting.input_based_windows(instance)
    else:
        exact_windows = pricing_emitting.full_windows(instance)

    heuristic_budget = config.heuristic_iterations()
    primal_active = config.primal_prune
    certified = False
    columns_generated = 0
    iterations = 0
    final_mission_rc = np.nan
    final_emitter_rc = np.nan
    t_rmp = t_pm = t_pe = 0.0
    solution = None
    duals = None

    while iterations < config.max_iterations:
        iterations += 1
        t0 = time.perf_counter()
        solution = builder.solve()
        t_rmp += time.perf_counter() - t0
        duals = solution.duals

        heuristic_pass = primal_active and iterations <= heuristic_budget
        t0 = time.perf_counter()
        m_stats: dict = {}
        mission_cols = pricing_mission.price_mission(
            instance,
            duals,
            cap=config.cap_per_pricing,
            epsilon=config.epsilon,
            stats=m_stats,
        )
        t_pm += time.perf_counter() - t0

        t0 = time.perf_counter()
        if heuristic_pass:
            windows = pricing_emitting.primal_windows(instance, solution)
        else:
            windows = exact_windows
        e_stats: dict = {}
        emitter_cols = pricing_emitting.price_emitting(
            instance,
            duals,
            windows,
            cap=config.cap_per_pricing,
            epsilon=config.epsilon,
            dual_prune=config.dual_prune,
            stats=e_stats,
        )
        t_pe += time.perf_counter() - t0

        added = 0
        for path in mission_cols:
            added += builder.add_mission(path)
        for path in emitter_cols:
            added += builder.add_emitter(path)
            # A widened copy costs the same, covers more, and makes the
            # final integer solve far less dependent on exact stay spans.
            builder.add_emitter(pricing_emitting.inflate_stays(instance, path))
        columns_generated += added

        run_log.append(
            {
                "iteration": iterations,
                "lp_value": solution.objective,
                "new_mission": len(mission_cols),
                "new_emitter": len(emitter_cols),
                "added": added,
                "min_rc_mission": m_stats.get("min_reduced_cost"),
                "min_rc_emitter": e_stats.get("min_reduced_cost"),
                "heuristic_windows": heuristic_pass,
                "duals": {
                    "rho": duals.rho,
                    "beta": duals.beta,
                    "xi_positive": len(duals.xi),
                },
            }
        )

        if added == 0:
            if heuristic_pass:
                primal_active = False  # certify with exact windows only
                continue
            final_mission_rc = float(m_stats.get("min_reduced_cost", np.inf))
            final_emitter_rc = float(e_stats.get("min_reduced_cost", np.inf))
            certified = (
                final_mission_rc >= -config.epsilon
                and final_emitter_rc >= -config.epsilon
            )
            break

    timings["rmp"] = t_rmp
    timings["pricing_mission"] = t_pm
    timings["pricing_emitting"] = t_pe

    lp_bound = float(solution.objective)
    frac_m, frac_e = solution.fractional_paths()
    fractional_before = len(frac_m) + len(frac_e)

    t0 = time.perf_counter()
    stem_and_blender(
        instance,
        builder,
        solution,
        duals,
        exact_windows,
        max_paths_per_stem=config.sb_max_paths,
    )
    timings["stem_blender"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    _complete_candidate_demands(instance, builder, config)
    timings["demand_completion"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    integer_solution = builder.solve(integral=True)
    timings["integer"] = time.perf_counter() - t0
    mission_plan, emitter_plan = builder.integer_weights_plan(integer_solution)
    fractional_after = sum(
        1
        for w in list(integer_solution.mission_weights.values())
        + list(integer_solution.emitter_weights.values())
        if WEIGHT_TOL < w < 1 - WEIGHT_TOL
    )
    penalty_used = 0.0
    if config.coverage_penalty is not None:
        penalty_used = _penalty_in_solution(builder, integer_solution)

    report = validate(instance, mission_plan, emitter_plan)
    if config.coverage_penalty is None and not report.ok:
        raise EngineError(f"integer plan failed validation: {report}")

    return DcgResult(
        mission_plan=tuple(mission_plan),
        emitter_plan=tuple(emitter_plan),
        objective=float(integer_solution.objective),
        lp_bound=lp_bound,
        iterations=iterations,
        columns_generated=columns_generated,
        timings=timings,
        fractional_before=fractional_before,
        fractional_after=fractional_after,
        certified=certified,
        final_mission_rc=final_mission_rc,
        final_emitter_rc=final_emitter_rc,
        run_log=run_log,
        validation=report,
        penalty_used=penalty_used,
        warm_start=config.warm_start,
    )


def _complete_candidate_demands(
    instance: Instance, builder: RmpBuilder, config: DcgConfig
) -> None:
    """Final pool augmentation: optimal emitter columns for the coverage
    demand of candidate integral mission selections.

    The binary master can only combine pooled emitter paths, which were
    priced against fractional duals; here the demand of (a) a preliminary
    integral pick from the pool and (b) the cheapest integral partition of
    the pooled mission columns is covered exactly, so the final solve has
    whole-plan emitter options for the selections it is most likely to
    make.
    """
    candidates: list[tuple[MissionPath, ...]] = []
    try:
        prelim = builder.solve(integral=True)
        mission, _ = builder.integer_weights_plan(prelim)
        if mission:
            candidates.append(tuple(mission))
    except (RmpInfeasible, lp_core.LpError):
        pass
    try:
        stage_mission, _ = _cheapest_pool_partition(instance, builder)
        if stage_mission:
            candidates.append(tuple(stage_mission))
    except (RmpInfeasible, lp_core.LpError):
        pass
    seen: set = set()
    for mission in candidates:
        key = tuple(sorted(p.visits for p in mission))
        if key in seen:
            continue
        seen.add(key)
        demand = [pair for p in mission for pair in p.work_pairs()]
        try:
            stage = emitter_only_cg(
                instance,
                demand,
                epsilon=config.epsilon,
                cap=config.cap_per_pricing,
                dual_prune=config.dual_prune,
                sb_max_paths=config.sb_max_paths,
            )
        except RmpInfeasible:
            continue
        for path in list(stage.generated_emitter) + list(stage.plan_emitter):
            builder.add_emitter(path)
            builder.add_emitter(pricing_emitting.inflate_stays(instance, path))


def _cheapest_pool_partition(instance: Instance, builder: RmpBuilder):
    """Min-distance integral partition using the pooled mission columns."""
    problem = lp_core.LpProblem(name="pool_partition")
    var_of = {}
    for path in builder.mission_paths:
        var_of[path] = problem.add_var(obj=path.cost, ub=1.0)
    for job in instance.jobs:
        problem.add_row(
            lp_core.EQ,
            1.0,
            [(var_of[p], 1.0) for p in builder.mission_paths if job.id in p.jobs],
        )
    problem.add_row(
        lp_core.LEQ,
        float(instance.mission_fleet),
        [(var_of[p], 1.0) for p in builder.mission_paths],
    )
    sol = lp_core.solve_binary(problem, list(var_of.values()))
    if sol.status != lp_core.OPTIMAL:
        raise RmpInfeasible("no integral partition in pool", "partition")
    chosen = [p for p, v in var_of.items() if sol.x[v] > 0.5]
    return chosen, float(sol.objective)


def _greedy_incumbent(instance: Instance):
    """Greedy plan reused as the initial integer incumbent, when it fits."""
    from . import baselines

    try:
        plan = baselines.greedy(instance, enforce_fleet=False)
    except baselines.InfeasiblePlanError:
        return None, None
    if (
        len(plan.mission_plan) > instance.mission_fleet
        or len(plan.emitter_plan) > instance.emitter_fleet
    ):
        return None, None
    return list(plan.mission_plan), list(plan.emitter_plan)


def _add_coverage_penalties(builder: RmpBuilder, penalty: float) -> None:
    """Relax every linking row with a priced slack (fleet-min probing)."""
    builder._penalty_vars = []
    for (i, t), row in builder.linking_row.items():
        var = builder.problem.add_var(obj=penalty)
        builder.problem.set_entry(row, var, -1.0)
        builder._penalty_vars.append(var)


def _penalty_in_solution(builder: RmpBuilder, solution: RmpSolution) -> float:
    pvars = getattr(builder, "_penalty_vars", [])
    if not pvars or solution.lp is None:
        return 0.0
    return float(sum(solution.lp.x[v] for v in pvars))


# ---------------------------------------------------------------------------
# Fleet minimization
# ---------------------------------------------------------------------------


def fleet_min_emitters(
    instance: Instance, config: DcgConfig | None = None
) -> tuple[int, DcgResult]:
    """Smallest emitter fleet able to cover all jobs, by binary search on V.

    Each probe runs the full engine with penalized coverage so the master
    stays feasible below the greedy fleet size; a probe is feasible when
    the final integer plan uses no penalty.
    """
    from . import baselines

    config = config or DcgConfig()
    penalty = coverage_penalty_scale(instance)
    greedy_plan = baselines.greedy(instance, enforce_fleet=False)
    hi = max(len(greedy_plan.emitter_plan), 1)
    best_v = hi
    best_result: DcgResult | None = None

    def probe(v: int) -> DcgResult | None:
        probe_inst = replace(instance, emitter_fleet=v)
        probe_cfg = replace(config, coverage_penalty=penalty, warm_start="none")
        try:
            result = run(probe_inst, probe_cfg)
        except RmpInfeasible:
            return None
        if result.penalty_used > 1e-6 or not result.validation.ok:
            return None
        return result

    lo = 1
    result_hi = probe(hi)
    if result_hi is None:
        raise EngineError("fleet-min probe failed at the greedy fleet size")
    best_result = result_hi
    while lo < best_v:
        mid = (lo + best_v) // 2
        result = probe(mid)
        if result is None:
            lo = mid + 1
        else:
            best_v = mid
            best_result = result
    return best_v, best_result
