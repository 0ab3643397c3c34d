"""Problem data model: jobs, coverage spots, geometry and instance generation.

Conventions used throughout the package:

- Time is discretized into integer steps 0..horizon.  A vehicle that is
  present at a location during steps [a, d] (inclusive) becomes free to
  travel at step d+1 and, after a trip of ``tt`` steps, is present at the
  destination from step d+1+tt.  Depots carry no presence step: vehicles
  are free at step 0 and may arrive back at the "end" step horizon+1.
- Distances are Euclidean in a flat rectangle; travel times are
  ceil(distance / speed) steps.
- A job with window [window_start, window_end] and workload tau must be
  worked over tau consecutive steps [w, w+tau-1] with
  window_start <= w and w+tau-1 <= window_end.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Point = tuple[float, float]

# Distances are rounded once at matrix construction so every consumer
# (pricing, baselines, brute-force search) sums identical leg values.
DIST_DECIMALS = 9


class InstanceError(ValueError):
    """Structural problem with an instance or generator configuration."""


class ParseError(InstanceError):
    """Malformed instance file; message names the offending field."""


def euclidean(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def rounded_distance(a: Point, b: Point) -> float:
    return round(euclidean(a, b), DIST_DECIMALS)


def travel_time(a: Point, b: Point, speed: float) -> int:
    """Discretized trip duration: ceil(distance/speed); 0 for identical points."""
    if speed <= 0:
        raise InstanceError(f"speed must be positive, got {speed}")
    dist = euclidean(a, b)
    if dist == 0.0:
        return 0
    # Guard against ceil(k + 1e-16) artifacts when dist is an exact multiple.
    ratio = dist / speed
    nearest = round(ratio)
    if abs(ratio - nearest) < 1e-9:
        return max(int(nearest), 1)
    return int(math.ceil(ratio))


@dataclass(frozen=True)
class Job:
    id: int
    location: Point
    window_start: int
    window_end: int
    workload: int

    def validate(self) -> None:
        if self.workload < 1:
            raise InstanceError(f"job {self.id}: workload must be >= 1")
        if self.window_start < 0:
            raise InstanceError(f"job {self.id}: window_start must be >= 0")
        if self.window_start + self.workload - 1 > self.window_end:
            raise InstanceError(
                f"job {self.id}: workload {self.workload} does not fit in "
                f"window [{self.window_start}, {self.window_end}]"
            )


@dataclass(frozen=True)
class CoverageSpot:
    id: int
    location: Point


@dataclass(frozen=True)
class Instance:
    """Immutable problem instance; safe to share across concurrent readers."""

    jobs: tuple[Job, ...]
    spots: tuple[CoverageSpot, ...]
    depot: Point
    horizon: int
    mission_fleet: int
    emitter_fleet: int
    mission_speed: float
    emitter_speed: float
    coverage_radius: float
    area: tuple[float, float]
    meta: dict = field(default_factory=dict, compare=False)

    # ---- derived geometry (cached lazily, never serialized) ----

    def __post_init__(self) -> None:
        object.__setattr__(self, "_cache", {})

    def _cached(self, key, build):
        cache = self.__dict__["_cache"]
        if key not in cache:
            cache[key] = build()
        return cache[key]

    @property
    def num_jobs(self) -> int:
        return len(self.jobs)

    @property
    def num_spots(self) -> int:
        return len(self.spots)

    def job(self, job_id: int) -> Job:
        index = self._cached("job_index", lambda: {j.id: j for j in self.jobs})
        try:
            return index[job_id]
        except KeyError:
            raise InstanceError(f"unknown job id {job_id}") from None

    def spot(self, spot_id: int) -> CoverageSpot:
        index = self._cached("spot_index", lambda: {s.id: s for s in self.spots})
        try:
            return index[spot_id]
        except KeyError:
            raise InstanceError(f"unknown spot id {spot_id}") from None

    def coverage_set(self, job_id: int) -> frozenset[int]:
        """Spot ids within coverage_radius of the job (boundary inclusive)."""
        sets = self._cached("coverage_sets", self._build_coverage_sets)
        if job_id not in sets:
            raise InstanceError(f"unknown job id {job_id}")
        return sets[job_id]

    def _build_coverage_sets(self) -> dict[int, frozenset[int]]:
        out = {}
        for job in self.jobs:
            out[job.id] = frozenset(
                s.id
                for s in self.spots
                if euclidean(job.location, s.location) <= self.coverage_radius + 1e-12
            )
        return out

    def covering_jobs(self, spot_id: int) -> frozenset[int]:
        """Job ids whose coverage set contains the spot."""
        by_spot = self._cached(
            "spot_jobs",
            lambda: {
                s.id: frozenset(
                    j.id for j in self.jobs if s.id in self.coverage_set(j.id)
                )
                for s in self.spots
            },
        )
        if spot_id not in by_spot:
            raise InstanceError(f"unknown spot id {spot_id}")
        return by_spot[spot_id]

    # Locations are indexed 0..n-1 for jobs (by position) and the depot is a
    # separate argument; matrices are rounded once so all consumers agree.

    def mission_dist(self, a: int | None, b: int | None) -> float:
        """Rounded distance between jobs (ids) or the depot (None)."""
        pa = self.depot if a is None else self.job(a).location
        pb = self.depot if b is None else self.job(b).location
        return rounded_distance(pa, pb)

    def emitter_dist(self, a: int | None, b: int | None) -> float:
        pa = self.depot if a is None else self.spot(a).location
        pb = self.depot if b is None else self.spot(b).location
        return rounded_distance(pa, pb)

    def mission_tt(self, a: int | None, b: int | None) -> int:
        pa = self.depot if a is None else self.job(a).location
        pb = self.depot if b is None else self.job(b).location
        return travel_time(pa, pb, self.mission_speed)

    def emitter_tt(self, a: int | None, b: int | None) -> int:
        pa = self.depot if a is None else self.spot(a).location
        pb = self.depot if b is None else self.spot(b).location
        return travel_time(pa, pb, self.emitter_speed)

    def validate(self) -> None:
        seen = set()
        for job in self.jobs:
            job.validate()
            if job.id in seen:
                raise InstanceError(f"duplicate job id {job.id}")
            seen.add(job.id)
            if job.window_end + self.mission_tt(job.id, None) > self.horizon:
                raise InstanceError(
                    f"job {job.id}: window end {job.window_end} leaves no time "
                    f"to return to the depot within horizon {self.horizon}"
                )
            if not self.coverage_set(job.id):
                raise InstanceError(f"job {job.id} has no covering spot")
        seen = set()
        for spot in self.spots:
            if spot.id in seen:
                raise InstanceError(f"duplicate spot id {spot.id}")
            seen.add(spot.id)
        if self.horizon < 1:
            raise InstanceError("horizon must be >= 1")
        if self.mission_fleet < 0 or self.emitter_fleet < 0:
            raise InstanceError("fleet sizes must be >= 0")
        if self.mission_speed <= 0 or self.emitter_speed <= 0:
            raise InstanceError("speeds must be positive")

    # ---- serialization ----

    def to_dict(self) -> dict:
        return {
            "format": "coverage-routing-instance",
            "version": 1,
            "units": {
                "distance": "abstract length units",
                "time": "discrete steps (travel time = ceil(distance/speed))",
            },
            "area": [self.area[0], self.area[1]],
            "depot": [self.depot[0], self.depot[1]],
            "horizon": self.horizon,
            "mission_fleet": self.mission_fleet,
            "emitter_fleet": self.emitter_fleet,
            "mission_speed": self.mission_speed,
            "emitter_speed": self.emitter_speed,
            "coverage_radius": self.coverage_radius,
            "jobs": [
                {
                    "id": j.id,
                    "x": j.location[0],
                    "y": j.location[1],
                    "window_start": j.window_start,
                    "window_end": j.window_end,
                    "workload": j.workload,
                }
                for j in self.jobs
            ],
            "spots": [
                {"id": s.id, "x": s.location[0], "y": s.location[1]}
                for s in self.spots
            ],
            "meta": self.meta,
        }


def save(instance: Instance, path: str | Path) -> None:
    text = json.dumps(instance.to_dict(), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ParseError(f"{context}: missing required field '{key}'")
    return mapping[key]


def load(path: str | Path) -> Instance:
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON at line {exc.lineno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    jobs = []
    for k, item in enumerate(_require(data, "jobs", str(path))):
        ctx = f"{path}: jobs[{k}]"
        jobs.append(
            Job(
                id=int(_require(item, "id", ctx)),
                location=(float(_require(item, "x", ctx)), float(_require(item, "y", ctx))),
                window_start=int(_require(item, "window_start", ctx)),
                window_end=int(_require(item, "window_end", ctx)),
                workload=int(_require(item, "workload", ctx)),
            )
        )
    spots = []
    for k, item in enumerate(_require(data, "spots", str(path))):
        ctx = f"{path}: spots[{k}]"
        spots.append(
            CoverageSpot(
                id=int(_require(item, "id", ctx)),
                location=(float(_require(item, "x", ctx)), float(_require(item, "y", ctx))),
            )
        )
    depot = _require(data, "depot", str(path))
    area = _require(data, "area", str(path))
    instance = Instance(
        jobs=tuple(jobs),
        spots=tuple(spots),
        depot=(float(depot[0]), float(depot[1])),
        horizon=int(_require(data, "horizon", str(path))),
        mission_fleet=int(_require(data, "mission_fleet", str(path))),
        emitter_fleet=int(_require(data, "emitter_fleet", str(path))),
        mission_speed=float(_require(data, "mission_speed", str(path))),
        emitter_speed=float(_require(data, "emitter_speed", str(path))),
        coverage_radius=float(_require(data, "coverage_radius", str(path))),
        area=(float(area[0]), float(area[1])),
        meta=data.get("meta", {}),
    )
    instance.validate()
    return instance


# ---------------------------------------------------------------------------
# Random clustered instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowPolicy:
    """Sampling parameters for job windows and workloads.

    ``start_frac`` bounds the latest window start as a fraction of the
    horizon; ``slack_frac`` bounds the extra window width beyond the
    workload.  With ``coverage_reach_floor`` the window start of each job is
    additionally forced at or above the earliest step any emitter could
    start covering it from the depot, which keeps two-stage baselines
    feasible; disable it to reproduce fully unconstrained starts.
    """

    start_frac: float = 0.6
    slack_frac: float = 0.2
    workload_min: int = 1
    workload_max: int = 4
    coverage_reach_floor: bool = True


@dataclass(frozen=True)
class GeneratorConfig:
    num_jobs: int
    num_clusters: int
    cluster_radius: float
    coverage_radius: float = 50.0
    mesh_spacing: float = 50.0
    area: tuple[float, float] = (500.0, 500.0)
    horizon: int = 60
    mission_speed: float = 50.0
    emitter_speed: float = 50.0
    mission_fleet: int | None = None  # default: one vehicle per job
    emitter_fleet: int | None = None
    window_policy: WindowPolicy = field(default_factory=WindowPolicy)
    seed: int = 0

    def validate(self) -> None:
        if self.num_clusters < 1 or self.num_jobs < self.num_clusters:
            raise InstanceError(
                f"need num_jobs >= num_clusters >= 1, got "
                f"{self.num_jobs} jobs / {self.num_clusters} clusters"
            )
        if self.cluster_radius <= 0 or self.coverage_radius <= 0:
            raise InstanceError("radii must be positive")
        if self.mesh_spacing <= 0:
            raise InstanceError("mesh_spacing must be positive")
        if 2 * self.cluster_radius >= min(self.area):
            raise InstanceError(
                f"cluster ball of radius {self.cluster_radius} does not fit "
                f"inside area {self.area}"
            )


def mesh_spots(area: tuple[float, float], spacing: float) -> tuple[CoverageSpot, ...]:
    """Square grid of candidate emitter stopping locations over the area."""
    nx = int(math.floor(area[0] / spacing + 1e-9)) + 1
    ny = int(math.floor(area[1] / spacing + 1e-9)) + 1
    spots = []
    sid = 0
    for ix in range(nx):
        for iy in range(ny):
            spots.append(CoverageSpot(id=sid, location=(ix * spacing, iy * spacing)))
            sid += 1
    return tuple(spots)


def _sample_in_ball(rng: np.random.Generator, center: Point, radius: float) -> Point:
    theta = rng.uniform(0.0, 2.0 * math.pi)
    r = radius * math.sqrt(rng.uniform(0.0, 1.0))
    return (center[0] + r * math.cos(theta), center[1] + r * math.sin(theta))


def generate(config: GeneratorConfig) -> Instance:
    """Clustered random instance; deterministic for a given seed."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    area = config.area
    depot = (area[0] / 2.0, area[1] / 2.0)
    spots = mesh_spots(area, config.mesh_spacing)
    spot_points = [s.location for s in spots]

    r = config.cluster_radius
    centroids = [
        (rng.uniform(r, area[0] - r), rng.uniform(r, area[1] - r))
        for _ in range(config.num_clusters)
    ]
    # Even split, remainder to the earlier clusters.
    counts = [config.num_jobs // config.num_clusters] * config.num_clusters
    for k in range(config.num_jobs % config.num_clusters):
        counts[k] += 1

    policy = config.window_policy
    horizon = config.horizon
    jobs = []
    job_id = 0
    for center, count in zip(centroids, counts):
        for _ in range(count):
            location = None
            for _attempt in range(200):
                cand = _sample_in_ball(rng, center, r)
                if not (0 <= cand[0] <= area[0] and 0 <= cand[1] <= area[1]):
                    continue
                covered = any(
                    euclidean(cand, p) <= config.coverage_radius + 1e-12
                    for p in spot_points
                )
                if covered:
                    location = cand
                    break
            if location is None:
                raise InstanceError(
                    f"could not place a covered job in cluster at {center}; "
                    f"widen coverage_radius or mesh"
                )
            workload = int(rng.integers(policy.workload_min, policy.workload_max + 1))
            start_floor = 0
            if policy.coverage_reach_floor:
                start_floor = min(
                    travel_time(depot, p, config.emitter_speed)
                    for p in spot_points
                    if euclidean(location, p) <= config.coverage_radius + 1e-12
                )
            start_hi = max(start_floor, int(policy.start_frac * horizon))
            start = int(rng.integers(start_floor, start_hi + 1))
            slack = int(rng.integers(0, int(policy.slack_frac * horizon) + 1))
            end = start + workload - 1 + slack
            # Keep the job returnable to the depot within the horizon.
            latest_end = horizon - travel_time(location, depot, config.mission_speed)
            end = min(end, latest_end)
            if end < start + workload - 1:
                start = latest_end - workload + 1
                end = latest_end
                if start < start_floor:
                    raise InstanceError(
                        f"horizon {horizon} too short for a job at {location} "
                        f"with workload {workload}"
                    )
            jobs.append(
                Job(
                    id=job_id,
                    location=location,
                    window_start=start,
                    window_end=end,
                    workload=workload,
                )
            )
            job_id += 1

    instance = Instance(
        jobs=tuple(jobs),
        spots=spots,
        depot=depot,
        horizon=horizon,
        mission_fleet=config.mission_fleet if config.mission_fleet is not None else config.num_jobs,
        emitter_fleet=config.emitter_fleet if config.emitter_fleet is not None else config.num_jobs,
        mission_speed=config.mission_speed,
        emitter_speed=config.emitter_speed,
        coverage_radius=config.coverage_radius,
        area=area,
        meta={
            "generator": {
                "num_jobs": config.num_jobs,
                "num_clusters": config.num_clusters,
                "cluster_radius": config.cluster_radius,
                "seed": config.seed,
            },
            "centroids": [[c[0], c[1]] for c in centroids],
        },
    )
    instance.validate()
    return instance


def translate(instance: Instance, dx: float, dy: float) -> Instance:
    """Shifted copy of the instance (used by geometry property tests)."""
    return replace(
        instance,
        jobs=tuple(
            replace(j, location=(j.location[0] + dx, j.location[1] + dy))
            for j in instance.jobs
        ),
        spots=tuple(
            replace(s, location=(s.location[0] + dx, s.location[1] + dy))
            for s in instance.spots
        ),
        depot=(instance.depot[0] + dx, instance.depot[1] + dy),
    )
