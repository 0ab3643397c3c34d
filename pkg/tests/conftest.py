"""Shared fixtures: deterministic tiny instances sized for the brute-force
reference solvers."""

from __future__ import annotations

import numpy as np
import pytest

from covroute.instance import CoverageSpot, Instance, Job, travel_time


def tiny_instance(
    seed: int,
    max_jobs: int = 4,
    max_spots: int = 4,
    horizon: int = 15,
    area: float = 120.0,
    speed: float = 40.0,
    coverage_radius: float = 35.0,
) -> Instance:
    """Small random instance within the exhaustive-oracle guards.

    Window starts are kept at or above the earliest step an emitter can
    reach a covering spot, so two-stage schedules always exist.
    """
    rng = np.random.default_rng(seed)
    depot = (area / 2.0, area / 2.0)
    n_jobs = int(rng.integers(2, max_jobs + 1))
    n_spots = int(rng.integers(2, max_spots + 1))

    for _attempt in range(200):
        spots = tuple(
            CoverageSpot(id=k, location=(float(rng.uniform(0, area)), float(rng.uniform(0, area))))
            for k in range(n_spots)
        )
        jobs = []
        ok = True
        for j in range(n_jobs):
            anchor = spots[int(rng.integers(0, n_spots))]
            angle = rng.uniform(0, 2 * np.pi)
            radius = rng.uniform(0, coverage_radius * 0.9)
            loc = (
                float(anchor.location[0] + radius * np.cos(angle)),
                float(anchor.location[1] + radius * np.sin(angle)),
            )
            covering = [
                s for s in spots
                if np.hypot(loc[0] - s.location[0], loc[1] - s.location[1])
                <= coverage_radius
            ]
            if not covering:
                ok = False
                break
            workload = int(rng.integers(1, 4))
            reach = min(
                travel_time(depot, s.location, speed) for s in covering
            )
            start_floor = max(reach, travel_time(depot, loc, speed))
            latest_end = horizon - travel_time(loc, depot, speed)
            start_hi = latest_end - workload + 1 - 2
            if start_hi < start_floor:
                ok = False
                break
            start = int(rng.integers(start_floor, start_hi + 1))
            slack = int(rng.integers(0, 3))
            end = min(start + workload - 1 + slack, latest_end)
            jobs.append(
                Job(id=j, location=loc, window_start=start, window_end=end, workload=workload)
            )
        if not ok:
            continue
        instance = Instance(
            jobs=tuple(jobs),
            spots=spots,
            depot=depot,
            horizon=horizon,
            mission_fleet=n_jobs,
            emitter_fleet=n_jobs,
            mission_speed=speed,
            emitter_speed=speed,
            coverage_radius=coverage_radius,
            area=(area, area),
        )
        try:
            instance.validate()
        except Exception:
            continue
        return instance
    raise RuntimeError(f"could not sample a tiny instance for seed {seed}")


@pytest.fixture
def two_job_instance() -> Instance:
    inst = Instance(
        jobs=(Job(0, (30.0, 0.0), 2, 6, 2), Job(1, (60.0, 0.0), 5, 12, 3)),
        spots=(CoverageSpot(0, (30.0, 0.0)), CoverageSpot(1, (60.0, 0.0))),
        depot=(0.0, 0.0),
        horizon=16,
        mission_fleet=2,
        emitter_fleet=2,
        mission_speed=30.0,
        emitter_speed=30.0,
        coverage_radius=10.0,
        area=(100.0, 20.0),
    )
    inst.validate()
    return inst
