"""Restricted master problem over mission/emitter path pools.

Selects one mission path per job (partition), at most U mission and V
emitter paths (fleet caps), and links the two pools so that every worked
(job, step) pair is covered by at least one selected emitter path.
Solved as an LP by default, or as a 0/1 program for the final solve.

Dual prices are exposed in the nonnegative convention used by the pricing
problems:

    mission reduced cost = cost + rho - sum(pi_i over visited i)
                                + sum(xi[i, t] over worked (i, t))
    emitter reduced cost = cost + beta - sum(xi[i, t] over covered (i, t))
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import lp_core
from .instance import Instance, InstanceError

WEIGHT_TOL = 1e-6


class RmpError(RuntimeError):
    pass


class RmpInfeasible(RmpError):
    def __init__(self, message: str, constraint_class: str):
        super().__init__(message)
        self.constraint_class = constraint_class


@dataclass(frozen=True)
class MissionPath:
    """Ordered job visits with closed work intervals [work_start, work_end]."""

    visits: tuple[tuple[int, int, int], ...]  # (job_id, work_start, work_end)
    cost: float

    @staticmethod
    def build(instance: Instance, visits: Sequence[tuple[int, int, int]]) -> "MissionPath":
        visits = tuple((int(j), int(a), int(d)) for j, a, d in visits)
        path = MissionPath(visits=visits, cost=_mission_cost(instance, visits))
        path.validate(instance)
        return path

    @property
    def jobs(self) -> tuple[int, ...]:
        return tuple(v[0] for v in self.visits)

    def work_pairs(self) -> Iterable[tuple[int, int]]:
        """(job, step) pairs with work in progress (delta indicator support)."""
        for job_id, start, end in self.visits:
            for t in range(start, end + 1):
                yield (job_id, t)

    def validate(self, instance: Instance) -> None:
        if not self.visits:
            raise InstanceError("mission path must visit at least one job")
        seen = set()
        free = 0  # step from which the vehicle may travel
        prev = None  # previous location (None = depot)
        for job_id, start, end in self.visits:
            job = instance.job(job_id)
            if job_id in seen:
                raise InstanceError(f"mission path revisits job {job_id}")
            seen.add(job_id)
            if end - start + 1 != job.workload:
                raise InstanceError(
                    f"job {job_id}: work [{start}, {end}] != workload {job.workload}"
                )
            if start < job.window_start or end > job.window_end:
                raise InstanceError(
                    f"job {job_id}: work [{start}, {end}] outside window "
                    f"[{job.window_start}, {job.window_end}]"
                )
            if start < free + instance.mission_tt(prev, job_id):
                raise InstanceError(
                    f"job {job_id}: work start {start} unreachable before "
                    f"travel from previous location"
                )
            free = end + 1
            prev = job_id
        if free + instance.mission_tt(prev, None) > instance.horizon + 1:
            raise InstanceError("mission path cannot return to depot in time")


@dataclass(frozen=True)
class EmittingPath:
    """Ordered spot stays with closed coverage intervals [arrive, depart]."""

    stays: tuple[tuple[int, int, int], ...]  # (spot_id, arrive, depart)
    cost: float

    @staticmethod
    def build(instance: Instance, stays: Sequence[tuple[int, int, int]]) -> "EmittingPath":
        stays = tuple((int(s), int(a), int(d)) for s, a, d in stays)
        path = EmittingPath(stays=stays, cost=_emitter_cost(instance, stays))
        path.validate(instance)
        return path

    @property
    def spots(self) -> tuple[int, ...]:
        return tuple(s[0] for s in self.stays)

    def coverage_pairs(self, instance: Instance) -> frozenset[tuple[int, int]]:
        """(job, step) pairs covered by this path, clipped to job windows."""
        pairs = set()
        for spot_id, arrive, depart in self.stays:
            for job_id in instance.covering_jobs(spot_id):
                job = instance.job(job_id)
                lo = max(arrive, job.window_start)
                hi = min(depart, job.window_end)
                for t in range(lo, hi + 1):
                    pairs.add((job_id, t))
        return frozenset(pairs)

    def validate(self, instance: Instance) -> None:
        if not self.stays:
            raise InstanceError("emitting path must contain at least one stay")
        free = 0
        prev = None
        for spot_id, arrive, depart in self.stays:
            instance.spot(spot_id)
            if arrive > depart:
                raise InstanceError(f"stay at spot {spot_id}: arrive {arrive} > depart {depart}")
            if arrive < free + instance.emitter_tt(prev, spot_id):
                raise InstanceError(
                    f"stay at spot {spot_id}: arrival {arrive} unreachable "
                    f"before travel from previous stop"
                )
            if arrive < 0 or depart > instance.horizon:
                raise InstanceError(f"stay at spot {spot_id} outside horizon")
            free = depart + 1
            prev = spot_id
        if free + instance.emitter_tt(prev, None) > instance.horizon + 1:
            raise InstanceError("emitting path cannot return to depot in time")


def _mission_cost(instance: Instance, visits) -> float:
    cost = 0.0
    prev = None
    for job_id, _, _ in visits:
        cost += instance.mission_dist(prev, job_id)
        prev = job_id
    return cost + instance.mission_dist(prev, None)


def _emitter_cost(instance: Instance, stays) -> float:
    cost = 0.0
    prev = None
    for spot_id, _, _ in stays:
        cost += instance.emitter_dist(prev, spot_id)
        prev = spot_id
    return cost + instance.emitter_dist(prev, None)


@dataclass
class DualPrices:
    pi: dict[int, float]
    rho: float
    beta: float
    xi: dict[tuple[int, int], float]

    def xi_work_sum(self, job_id: int, start: int, end: int) -> float:
        return sum(self.xi.get((job_id, t), 0.0) for t in range(start, end + 1))

    @staticmethod
    def zero(instance: Instance) -> "DualPrices":
        return DualPrices(pi={j.id: 0.0 for j in instance.jobs}, rho=0.0, beta=0.0, xi={})


def reduced_cost_mission(instance: Instance, path: MissionPath, duals: DualPrices) -> float:
    rc = path.cost + duals.rho
    for job_id, start, end in path.visits:
        instance.job(job_id)
        rc -= duals.pi[job_id]
        rc += duals.xi_work_sum(job_id, start, end)
    return rc


def reduced_cost_emitter(instance: Instance, path: EmittingPath, duals: DualPrices) -> float:
    rc = path.cost + duals.beta
    for i, t in path.coverage_pairs(instance):
        rc -= duals.xi.get((i, t), 0.0)
    return rc


@dataclass
class RmpSolution:
    status: str
    objective: float
    mission_weights: dict[MissionPath, float]
    emitter_weights: dict[EmittingPath, float]
    duals: DualPrices | None
    fractional: bool
    lp: lp_core.LpSolution = field(repr=False, default=None)

    def fractional_paths(self) -> tuple[list[MissionPath], list[EmittingPath]]:
        fm = [
            p
            for p, w in self.mission_weights.items()
            if WEIGHT_TOL < w < 1.0 - WEIGHT_TOL
        ]
        fe = [
            p
            for p, w in self.emitter_weights.items()
            if WEIGHT_TOL < w < 1.0 - WEIGHT_TOL
        ]
        return fm, fe


class RmpBuilder:
    """Incremental RMP: fixed row structure, growing column pools.

    Linking rows exist only for steps inside each job's window; work
    indicators are identically zero elsewhere.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self.problem = lp_core.LpProblem(name="rmp")
        self.mission_paths: list[MissionPath] = []
        self.emitter_paths: list[EmittingPath] = []
        self._signatures: set = set()
        self._var_of_mission: dict[MissionPath, int] = {}
        self._var_of_emitter: dict[EmittingPath, int] = {}
        self._basis: lp_core.LpBasis | None = None

        self.partition_row = {}
        for job in instance.jobs:
            self.partition_row[job.id] = self.problem.add_row(
                lp_core.EQ, 1.0, name=f"partition[{job.id}]"
            )
        self.mission_fleet_row = self.problem.add_row(
            lp_core.LEQ, float(instance.mission_fleet), name="fleet_mission"
        )
        self.emitter_fleet_row = self.problem.add_row(
            lp_core.LEQ, float(instance.emitter_fleet), name="fleet_emitter"
        )
        self.linking_row = {}
        for job in instance.jobs:
            for t in range(job.window_start, job.window_end + 1):
                self.linking_row[(job.id, t)] = self.problem.add_row(
                    lp_core.LEQ, 0.0, name=f"link[{job.id},{t}]"
                )

    # ---- column management ----

    def add_mission(self, path: MissionPath) -> bool:
        key = ("m", path.visits)
        if key in self._signatures:
            return False
        self._signatures.add(key)
        var = self.problem.add_var(obj=path.cost, lb=0.0, ub=np.inf)
        for job_id, _, _ in path.visits:
            self.problem.set_entry(self.partition_row[job_id], var, 1.0)
        self.problem.set_entry(self.mission_fleet_row, var, 1.0)
        for i, t in path.work_pairs():
            self.problem.set_entry(self.linking_row[(i, t)], var, 1.0)
        self.mission_paths.append(path)
        self._var_of_mission[path] = var
        return True

    def add_emitter(self, path: EmittingPath) -> bool:
        key = ("e", path.stays)
        if key in self._signatures:
            return False
        self._signatures.add(key)
        var = self.problem.add_var(obj=path.cost, lb=0.0, ub=np.inf)
        self.problem.set_entry(self.emitter_fleet_row, var, 1.0)
        for i, t in path.coverage_pairs(self.instance):
            row = self.linking_row.get((i, t))
            if row is not None:
                self.problem.set_entry(row, var, -1.0)
        self.emitter_paths.append(path)
        self._var_of_emitter[path] = var
        return True

    def add_pools(self, mission: Iterable[MissionPath], emitter: Iterable[EmittingPath]) -> None:
        for p in mission:
            self.add_mission(p)
        for p in emitter:
            self.add_emitter(p)

    # ---- solving ----

    def _constraint_class(self, rows: list[int]) -> str:
        names = []
        n_jobs = self.instance.num_jobs
        for r in rows:
            if r < n_jobs:
                names.append("partition")
            elif r in (self.mission_fleet_row, self.emitter_fleet_row):
                names.append("fleet")
            else:
                names.append("linking")
        return ",".join(sorted(set(names))) or "unknown"

    def _pair_brancher(self):
        """Ryan-Foster style branching over the mission partition rows.

        Branches on a job pair served fractionally by common paths: one
        child forbids every mission column containing both jobs, the other
        forbids columns containing exactly one.  Both children only fix
        variable bounds, so they stay inside the bound-override B&B.  When
        no fractional pair exists (e.g. only schedules differ, or only
        emitter weights are fractional) the default variable dichotomy is
        used.
        """
        job_ids = [j.id for j in self.instance.jobs]
        membership = {
            self._var_of_mission[p]: frozenset(p.jobs) for p in self.mission_paths
        }

        def brancher(x, lb, ub):
            pair_weight: dict[tuple[int, int], float] = {}
            pair_vars: dict[tuple[int, int], list[int]] = {}
            for var, jobs in membership.items():
                if ub[var] <= 0.0:
                    continue
                w = x[var]
                if w <= WEIGHT_TOL:
                    continue
                jobs_sorted = sorted(jobs)
                for a in range(len(jobs_sorted)):
                    for b in range(a + 1, len(jobs_sorted)):
                        key = (jobs_sorted[a], jobs_sorted[b])
                        pair_weight[key] = pair_weight.get(key, 0.0) + w
                        pair_vars.setdefault(key, []).append(var)
            best_pair = None
            best_score = 1e-4
            for key, w in pair_weight.items():
                frac = abs(w - round(w))
                if frac > best_score:
                    best_score = frac
                    best_pair = key
            if best_pair is None:
                return None
            i, k = best_pair
            together_lb, together_ub = lb.copy(), ub.copy()
            apart_lb, apart_ub = lb.copy(), ub.copy()
            for var, jobs in membership.items():
                has_i = i in jobs
                has_k = k in jobs
                if has_i and has_k:
                    apart_ub[var] = 0.0
                elif has_i != has_k:
                    together_ub[var] = 0.0
            return [(together_lb, together_ub), (apart_lb, apart_ub)]

        return brancher

    def _incumbent_seed(self) -> tuple[np.ndarray, float] | None:
        """Integral feasible assignment from the pool, if one is known."""
        plan = getattr(self, "_incumbent_plan", None)
        if plan is None:
            return None
        mission, emitter = plan
        if (
            len(mission) > self.instance.mission_fleet
            or len(emitter) > self.instance.emitter_fleet
        ):
            return None
        x = np.zeros(self.problem.num_vars)
        try:
            for p in mission:
                x[self._var_of_mission[p]] = 1.0
            for p in emitter:
                x[self._var_of_emitter[p]] = 1.0
        except KeyError:
            return None
        obj = float(sum(p.cost for p in mission) + sum(p.cost for p in emitter))
        return x, obj

    def set_incumbent(self, mission: Iterable[MissionPath], emitter: Iterable[EmittingPath]):
        self._incumbent_plan = (list(mission), list(emitter))

    def solve(self, integral: bool = False) -> RmpSolution:
        if not self.mission_paths:
            raise RmpInfeasible("mission pool is empty", "partition")
        if integral:
            n = self.problem.num_vars
            lp_sol = lp_core.solve_binary(
                self.problem,
                range(n),
                brancher=self._pair_brancher(),
                initial=self._incumbent_seed(),
            )
        else:
            lp_sol = lp_core.solve_lp(self.problem, warm=self._basis)
        if lp_sol.status != lp_core.OPTIMAL:
            if lp_sol.status == lp_core.INFEASIBLE:
                cls = self._constraint_class(lp_sol.infeasible_rows)
                raise RmpInfeasible(
                    f"restricted master problem infeasible (violated: {cls})", cls
                )
            raise RmpError(f"LP solve failed with status {lp_sol.status}")
        if not integral:
            self._basis = lp_sol.basis
        mission_weights = {
            p: float(lp_sol.x[self._var_of_mission[p]]) for p in self.mission_paths
        }
        emitter_weights = {
            p: float(lp_sol.x[self._var_of_emitter[p]]) for p in self.emitter_paths
        }
        fractional = any(
            WEIGHT_TOL < w < 1.0 - WEIGHT_TOL
            for w in list(mission_weights.values()) + list(emitter_weights.values())
        )
        solution = RmpSolution(
            status=lp_sol.status,
            objective=float(lp_sol.objective),
            mission_weights=mission_weights,
            emitter_weights=emitter_weights,
            duals=None,
            fractional=fractional,
            lp=lp_sol,
        )
        if not integral:
            solution.duals = extract_duals(self, solution)
        return solution

    def integer_weights_plan(
        self, solution: RmpSolution
    ) -> tuple[list[MissionPath], list[EmittingPath]]:
        mission = [p for p, w in solution.mission_weights.items() if w > 0.5]
        emitter = [p for p, w in solution.emitter_weights.items() if w > 0.5]
        return mission, emitter


def extract_duals(builder: RmpBuilder, solution: RmpSolution) -> DualPrices:
    """Convert LP row duals into the nonnegative pricing convention.

    Under minimization the LP reports duals <= 0 on <= rows; rho, beta and
    xi flip signs so they are >= 0.  Verifies stationarity of the pooled
    columns (reduced costs >= -1e-6, ~0 for columns with positive weight).
    """
    lp_sol = solution.lp
    if lp_sol is None or lp_sol.status != lp_core.OPTIMAL:
        raise RmpError("duals requested from a non-optimal RMP solve")
    y = lp_sol.duals
    inst = builder.instance
    pi = {job.id: float(y[builder.partition_row[job.id]]) for job in inst.jobs}
    rho = -float(y[builder.mission_fleet_row])
    beta = -float(y[builder.emitter_fleet_row])
    xi = {}
    for (i, t), row in builder.linking_row.items():
        v = -float(y[row])
        if v > 1e-12:
            xi[(i, t)] = v
    duals = DualPrices(pi=pi, rho=max(rho, 0.0) + 0.0, beta=max(beta, 0.0) + 0.0, xi=xi)
    for path, weight in solution.mission_weights.items():
        rc = reduced_cost_mission(inst, path, duals)
        if rc < -1e-6 or (weight > WEIGHT_TOL and abs(rc) > 1e-6):
            raise RmpError(
                f"dual extraction failed stationarity check on mission path "
                f"(rc={rc:.2e}, weight={weight:.3f})"
            )
    for path, weight in solution.emitter_weights.items():
        rc = reduced_cost_emitter(inst, path, duals)
        if rc < -1e-6 or (weight > WEIGHT_TOL and abs(rc) > 1e-6):
            raise RmpError(
                f"dual extraction failed stationarity check on emitter path "
                f"(rc={rc:.2e}, weight={weight:.3f})"
            )
    return duals


def build_and_solve(
    instance: Instance,
    mission_pool: Iterable[MissionPath],
    emitter_pool: Iterable[EmittingPath],
    integral: bool = False,
) -> RmpSolution:
    """One-shot RMP over the given pools (Eq-style rows, LP or binary)."""
    builder = RmpBuilder(instance)
    builder.add_pools(mission_pool, emitter_pool)
    return builder.solve(integral=integral)
