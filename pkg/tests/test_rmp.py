import numpy as np
import pytest

from covroute.instance import CoverageSpot, Instance, InstanceError, Job
from covroute.rmp import (
    DualPrices,
    EmittingPath,
    MissionPath,
    RmpBuilder,
    RmpInfeasible,
    build_and_solve,
    reduced_cost_emitter,
    reduced_cost_mission,
)
from conftest import tiny_instance


@pytest.fixture
def inst(two_job_instance):
    return two_job_instance


def _exact_pool(inst):
    mission = [
        MissionPath.build(inst, [(0, 2, 3)]),
        MissionPath.build(inst, [(1, 5, 7)]),
    ]
    emitter = [
        EmittingPath.build(inst, [(0, 2, 3)]),
        EmittingPath.build(inst, [(1, 5, 7)]),
    ]
    return mission, emitter


class TestPathTypes:
    def test_mission_cost_is_route_distance(self, inst):
        path = MissionPath.build(inst, [(0, 2, 3), (1, 5, 7)])
        assert path.cost == pytest.approx(30.0 + 30.0 + 60.0)

    def test_work_indicator_support(self, inst):
        path = MissionPath.build(inst, [(0, 2, 3)])
        assert set(path.work_pairs()) == {(0, 2), (0, 3)}

    def test_workload_mismatch_rejected(self, inst):
        with pytest.raises(InstanceError):
            MissionPath.build(inst, [(0, 2, 5)])

    def test_window_violation_rejected(self, inst):
        with pytest.raises(InstanceError):
            MissionPath.build(inst, [(0, 1, 2)])

    def test_travel_separation_enforced(self, inst):
        # job 1 work cannot start before leaving job 0 and traveling 1 step
        with pytest.raises(InstanceError):
            MissionPath.build(inst, [(0, 2, 3), (1, 4, 6)])

    def test_emitter_coverage_support_clipped_to_windows(self, inst):
        path = EmittingPath.build(inst, [(0, 1, 3)])
        # step 1 is before job 0's window opens at 2
        assert path.coverage_pairs(inst) == {(0, 2), (0, 3)}

    def test_emitter_gap_must_cover_travel(self, inst):
        with pytest.raises(InstanceError):
            EmittingPath.build(inst, [(0, 2, 5), (1, 6, 8)])

    def test_emitter_horizon_return(self, inst):
        with pytest.raises(InstanceError):
            EmittingPath.build(inst, [(1, 5, 16)])


class TestBuildAndSolve:
    def test_exact_cover_pool_all_weights_one(self, inst):
        mission, emitter = _exact_pool(inst)
        sol = build_and_solve(inst, mission, emitter)
        assert sol.status == "optimal"
        assert all(w == pytest.approx(1.0) for w in sol.mission_weights.values())
        assert all(w == pytest.approx(1.0) for w in sol.emitter_weights.values())
        expected = sum(p.cost for p in mission) + sum(p.cost for p in emitter)
        assert sol.objective == pytest.approx(expected)
        assert not sol.fractional

    def test_zero_emitter_fleet_infeasible(self, inst):
        from dataclasses import replace

        inst0 = replace(inst, emitter_fleet=0)
        mission, emitter = _exact_pool(inst0)
        with pytest.raises(RmpInfeasible) as err:
            build_and_solve(inst0, mission, emitter)
        assert err.value.constraint_class != ""

    def test_uncovered_job_pool_infeasible_names_class(self, inst):
        mission = [
            MissionPath.build(inst, [(0, 2, 3)]),
            MissionPath.build(inst, [(1, 5, 7)]),
        ]
        emitter = [EmittingPath.build(inst, [(0, 2, 3)])]  # job 1 uncoverable
        with pytest.raises(RmpInfeasible) as err:
            build_and_solve(inst, mission, emitter)
        assert "linking" in err.value.constraint_class or "partition" in err.value.constraint_class

    def test_duplicate_columns_deduplicated(self, inst):
        mission, emitter = _exact_pool(inst)
        builder = RmpBuilder(inst)
        assert builder.add_mission(mission[0]) is True
        assert builder.add_mission(MissionPath.build(inst, [(0, 2, 3)])) is False
        assert builder.problem.num_vars == 1

    def test_linking_inequality_holds(self, inst):
        mission, emitter = _exact_pool(inst)
        sol = build_and_solve(inst, mission, emitter)
        work = {}
        for p, w in sol.mission_weights.items():
            for pair in p.work_pairs():
                work[pair] = work.get(pair, 0.0) + w
        cover = {}
        for p, w in sol.emitter_weights.items():
            for pair in p.coverage_pairs(inst):
                cover[pair] = cover.get(pair, 0.0) + w
        for pair, v in work.items():
            assert cover.get(pair, 0.0) >= v - 1e-9

    def test_integral_solve_matches_oracle(self, inst):
        from covroute import oracle

        mission, emitter = _exact_pool(inst)
        # enrich with the joint single-vehicle route and a chasing emitter
        mission.append(MissionPath.build(inst, [(0, 2, 3), (1, 5, 7)]))
        emitter.append(EmittingPath.build(inst, [(0, 2, 3), (1, 5, 7)]))
        sol = build_and_solve(inst, mission, emitter, integral=True)
        ref = oracle.exhaustive_joint(inst)
        assert sol.objective == pytest.approx(ref.objective, abs=1e-7)


class TestDuals:
    def test_slack_fleet_rows_zero_duals(self, inst):
        mission, emitter = _exact_pool(inst)
        sol = build_and_solve(inst, mission, emitter)
        assert sol.duals.rho == pytest.approx(0.0)
        assert sol.duals.beta == pytest.approx(0.0)

    def test_duals_nonnegative_and_stationary(self, inst):
        mission, emitter = _exact_pool(inst)
        sol = build_and_solve(inst, mission, emitter)
        duals = sol.duals
        assert duals.rho >= 0 and duals.beta >= 0
        assert all(v >= 0 for v in duals.xi.values())
        for p, w in sol.mission_weights.items():
            rc = reduced_cost_mission(inst, p, duals)
            assert rc >= -1e-6
            if w > 1e-6:
                assert abs(rc) <= 1e-6
        for p, w in sol.emitter_weights.items():
            rc = reduced_cost_emitter(inst, p, duals)
            assert rc >= -1e-6
            if w > 1e-6:
                assert abs(rc) <= 1e-6

    def test_basic_columns_zero_reduced_cost_from_raw_lp(self, inst):
        mission, emitter = _exact_pool(inst)
        builder = RmpBuilder(inst)
        builder.add_pools(mission, emitter)
        sol = builder.solve()
        y = sol.lp.duals
        # recompute mission reduced cost straight from raw row duals
        for p, w in sol.mission_weights.items():
            rc = p.cost
            for job_id, _, _ in p.visits:
                rc -= y[builder.partition_row[job_id]]
            rc -= y[builder.mission_fleet_row]
            for pair in p.work_pairs():
                rc -= y[builder.linking_row[pair]]
            if w > 1e-6:
                assert rc == pytest.approx(0.0, abs=1e-7)


class TestReducedCosts:
    def test_zero_duals_give_path_cost(self, inst):
        mission, emitter = _exact_pool(inst)
        z = DualPrices.zero(inst)
        assert reduced_cost_mission(inst, mission[0], z) == pytest.approx(mission[0].cost)
        assert reduced_cost_emitter(inst, emitter[0], z) == pytest.approx(emitter[0].cost)

    def test_pi_linearity(self, inst):
        mission, _ = _exact_pool(inst)
        z = DualPrices.zero(inst)
        z.pi[0] = 17.5
        assert reduced_cost_mission(inst, mission[0], z) == pytest.approx(
            mission[0].cost - 17.5
        )

    def test_random_duals_match_independent_sum(self):
        rng = np.random.default_rng(3)
        inst = tiny_instance(21)
        jobs = list(inst.jobs)
        duals = DualPrices(
            pi={j.id: float(rng.normal(0, 30)) for j in jobs},
            rho=float(rng.uniform(0, 5)),
            beta=float(rng.uniform(0, 5)),
            xi={
                (j.id, t): float(rng.uniform(0, 2))
                for j in jobs
                for t in range(j.window_start, j.window_end + 1)
                if rng.random() < 0.5
            },
        )
        job = jobs[0]
        w = job.window_start
        path = MissionPath.build(inst, [(job.id, w, w + job.workload - 1)])
        expected = (
            path.cost
            + duals.rho
            - duals.pi[job.id]
            + sum(duals.xi.get((job.id, t), 0.0) for t in range(w, w + job.workload))
        )
        assert reduced_cost_mission(inst, path, duals) == pytest.approx(expected, abs=1e-12)
        spot = sorted(inst.coverage_set(job.id))[0]
        arrive = inst.emitter_tt(None, spot)
        depart = inst.horizon - inst.emitter_tt(spot, None)
        epath = EmittingPath.build(inst, [(spot, arrive, depart)])
        covered = epath.coverage_pairs(inst)
        expected_e = (
            epath.cost + duals.beta - sum(duals.xi.get(pair, 0.0) for pair in covered)
        )
        assert reduced_cost_emitter(inst, epath, duals) == pytest.approx(
            expected_e, abs=1e-12
        )
