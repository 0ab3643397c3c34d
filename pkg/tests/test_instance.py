import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covroute.instance import (
    CoverageSpot,
    GeneratorConfig,
    Instance,
    InstanceError,
    Job,
    ParseError,
    WindowPolicy,
    euclidean,
    generate,
    load,
    mesh_spots,
    save,
    translate,
    travel_time,
)


def _flat_instance(jobs, spots, **kw):
    defaults = dict(
        depot=(0.0, 0.0),
        horizon=50,
        mission_fleet=4,
        emitter_fleet=4,
        mission_speed=30.0,
        emitter_speed=30.0,
        coverage_radius=50.0,
        area=(200.0, 200.0),
    )
    defaults.update(kw)
    return Instance(jobs=tuple(jobs), spots=tuple(spots), **defaults)


class TestTravelTime:
    def test_ceiling_rule_matches_worked_example(self):
        # distance 40 at speed 19 needs 3 steps; 37.33 needs only 2
        assert travel_time((0.0, 0.0), (40.0, 0.0), 19.0) == 3
        assert travel_time((0.0, 0.0), (37.33, 0.0), 19.0) == 2

    def test_identical_points(self):
        assert travel_time((5.0, 5.0), (5.0, 5.0), 10.0) == 0

    def test_exact_division(self):
        assert travel_time((0.0, 0.0), (50.0, 0.0), 50.0) == 1

    def test_nonpositive_speed_rejected(self):
        with pytest.raises(InstanceError):
            travel_time((0.0, 0.0), (1.0, 0.0), 0.0)

    @given(
        st.floats(1.0, 300.0),
        st.floats(1.0, 300.0),
        st.integers(1, 6),
        st.integers(1, 6),
    )
    @settings(max_examples=60, deadline=None)
    def test_collinear_exact_multiples_triangle(self, speed, base, k1, k2):
        # exact-multiple collinear layout: ceiling adds no slack
        a = (0.0, 0.0)
        b = (k1 * speed, 0.0)
        c = (k1 * speed + k2 * speed, 0.0)
        assert travel_time(a, c, speed) <= travel_time(a, b, speed) + travel_time(
            b, c, speed
        )

    @given(
        st.tuples(st.floats(0, 100), st.floats(0, 100)),
        st.tuples(st.floats(0, 100), st.floats(0, 100)),
        st.tuples(st.floats(0, 100), st.floats(0, 100)),
        st.floats(5.0, 60.0),
    )
    @settings(max_examples=80, deadline=None)
    def test_triangle_with_single_step_slack(self, a, b, c, speed):
        # ceil(x+y) <= ceil(x) + ceil(y): the two-leg trip never beats direct
        assert travel_time(a, c, speed) <= travel_time(a, b, speed) + travel_time(
            b, c, speed
        )


class TestCoverage:
    def test_boundary_inclusive(self):
        jobs = [Job(0, (0.0, 0.0), 5, 10, 2)]
        spots = [
            CoverageSpot(0, (0.0, 0.0)),
            CoverageSpot(1, (50.0, 0.0)),
            CoverageSpot(2, (120.0, 0.0)),
        ]
        inst = _flat_instance(jobs, spots)
        assert inst.coverage_set(0) == {0, 1}

    def test_zero_radius_colocated(self):
        jobs = [Job(0, (10.0, 10.0), 5, 10, 1)]
        spots = [CoverageSpot(0, (10.0, 10.0)), CoverageSpot(1, (10.0, 11.0))]
        inst = _flat_instance(jobs, spots, coverage_radius=0.0)
        assert inst.coverage_set(0) == {0}

    def test_unknown_job_raises(self):
        inst = _flat_instance([Job(0, (0.0, 0.0), 5, 10, 1)], [CoverageSpot(0, (0.0, 0.0))])
        with pytest.raises(InstanceError):
            inst.coverage_set(99)

    def test_matches_brute_force_scan(self):
        config = GeneratorConfig(num_jobs=10, num_clusters=3, cluster_radius=40.0, seed=11)
        inst = generate(config)
        for job in inst.jobs:
            expected = {
                s.id
                for s in inst.spots
                if euclidean(job.location, s.location) <= inst.coverage_radius
            }
            assert inst.coverage_set(job.id) == expected

    def test_translation_invariance(self):
        config = GeneratorConfig(num_jobs=6, num_clusters=2, cluster_radius=30.0, seed=5)
        inst = generate(config)
        shifted = translate(inst, 17.5, -42.25)
        for job in inst.jobs:
            assert inst.coverage_set(job.id) == shifted.coverage_set(job.id)


class TestGenerator:
    def test_one_job_per_cluster(self):
        config = GeneratorConfig(num_jobs=5, num_clusters=5, cluster_radius=20.0, seed=0)
        inst = generate(config)
        centroids = inst.meta["centroids"]
        assert len(centroids) == 5
        counts = [0] * 5
        for job in inst.jobs:
            dists = [euclidean(job.location, tuple(c)) for c in centroids]
            counts[int(np.argmin(dists))] += 1
        assert sorted(counts) == [1, 1, 1, 1, 1]

    def test_deterministic_for_seed(self):
        config = GeneratorConfig(num_jobs=12, num_clusters=3, cluster_radius=30.0, seed=42)
        assert generate(config) == generate(config)

    def test_jobs_inside_cluster_balls(self):
        config = GeneratorConfig(num_jobs=50, num_clusters=4, cluster_radius=25.0, seed=9)
        inst = generate(config)
        centroids = [tuple(c) for c in inst.meta["centroids"]]
        for job in inst.jobs:
            assert min(euclidean(job.location, c) for c in centroids) <= 25.0 + 1e-9

    def test_every_job_covered(self):
        config = GeneratorConfig(num_jobs=30, num_clusters=5, cluster_radius=60.0, seed=3)
        inst = generate(config)
        for job in inst.jobs:
            assert inst.coverage_set(job.id)

    def test_impossible_cluster_radius_rejected(self):
        config = GeneratorConfig(
            num_jobs=4, num_clusters=1, cluster_radius=300.0, area=(500.0, 500.0)
        )
        with pytest.raises(InstanceError):
            generate(config)

    def test_more_clusters_than_jobs_rejected(self):
        with pytest.raises(InstanceError):
            GeneratorConfig(num_jobs=2, num_clusters=3, cluster_radius=10.0).validate()

    def test_mesh_spacing(self):
        spots = mesh_spots((100.0, 50.0), 50.0)
        assert len(spots) == 3 * 2
        assert {s.location for s in spots} == {
            (0.0, 0.0),
            (0.0, 50.0),
            (50.0, 0.0),
            (50.0, 50.0),
            (100.0, 0.0),
            (100.0, 50.0),
        }


class TestSerialization:
    def test_round_trip_identity(self, tmp_path):
        config = GeneratorConfig(num_jobs=8, num_clusters=2, cluster_radius=30.0, seed=1)
        inst = generate(config)
        path = tmp_path / "inst.json"
        save(inst, path)
        assert load(path) == inst

    def test_round_trip_bytes_stable(self, tmp_path):
        config = GeneratorConfig(num_jobs=8, num_clusters=2, cluster_radius=30.0, seed=1)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save(generate(config), a)
        save(generate(config), b)
        assert a.read_bytes() == b.read_bytes()

    def test_missing_field_named(self, tmp_path):
        config = GeneratorConfig(num_jobs=4, num_clusters=2, cluster_radius=30.0, seed=1)
        inst = generate(config)
        data = inst.to_dict()
        del data["jobs"][0]["workload"]
        path = tmp_path / "broken.json"
        import json

        path.write_text(json.dumps(data))
        with pytest.raises(ParseError, match="workload"):
            load(path)

    def test_horizon_shorter_than_window_rejected(self, tmp_path):
        config = GeneratorConfig(num_jobs=4, num_clusters=2, cluster_radius=30.0, seed=1)
        inst = generate(config)
        data = inst.to_dict()
        data["horizon"] = 3
        path = tmp_path / "short.json"
        import json

        path.write_text(json.dumps(data))
        with pytest.raises(InstanceError):
            load(path)

    def test_not_json(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            load(path)


class TestValidation:
    def test_window_too_small_for_workload(self):
        with pytest.raises(InstanceError):
            Job(0, (0.0, 0.0), 5, 6, 3).validate()

    def test_uncoverable_job_rejected(self):
        jobs = [Job(0, (0.0, 0.0), 5, 10, 2)]
        spots = [CoverageSpot(0, (150.0, 0.0))]
        inst = _flat_instance(jobs, spots, coverage_radius=10.0)
        with pytest.raises(InstanceError, match="covering spot"):
            inst.validate()
