"""Pricing for emitter paths in the time-expanded spot network.

A path is a sequence of stays (spot, arrive, depart).  Staying collects
the pooled linking-duals of every job in range at every covered step;
traveling costs distance.  The search enumerates candidate stays from a
TimeWindows object:

- input-based windows derive entry/exit times from the job time windows;
- primal windows derive them from the work intervals of the incumbent
  fractional mission paths (heuristic);
- dual windows restrict attention to steps with positive linking duals.

Dual-based restriction is applied as interval shrinking: any candidate
stay is reduced to the smallest sub-interval holding its positive-reward
steps, which loses no reduced cost because stay duration itself is free.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .instance import Instance
from .rmp import DualPrices, EmittingPath, RmpSolution, WEIGHT_TOL

EPS_RC = 1e-6


@dataclass
class EmitterLabel:
    spot: int  # spot index, or -1 for the depot
    time: int  # step from which the vehicle may travel
    rc: float
    parent: "EmitterLabel | None" = None
    arrive: int = -1
    depart: int = -1


@dataclass
class TimeWindows:
    """Per-spot candidate entry/exit steps, plus the beneficial intervals
    recorded by the dual-based construction (empty tuple when absent)."""

    entries: dict[int, tuple[int, ...]]
    exits: dict[int, tuple[int, ...]]
    intervals: dict[int, tuple[tuple[int, int], ...]] = field(default_factory=dict)

    def spot_entries(self, spot_id: int) -> tuple[int, ...]:
        return self.entries.get(spot_id, ())

    def spot_exits(self, spot_id: int) -> tuple[int, ...]:
        return self.exits.get(spot_id, ())


def full_windows(instance: Instance) -> TimeWindows:
    """Every step is a candidate entry and exit (no pruning)."""
    every = tuple(range(instance.horizon + 1))
    return TimeWindows(
        entries={s.id: every for s in instance.spots},
        exits={s.id: every for s in instance.spots},
    )


def _windows_from_intervals(
    instance: Instance, spot_intervals: dict[int, list[tuple[int, int]]]
) -> TimeWindows:
    """Entry times are interval starts not strictly inside another interval;
    exit times are interval ends not strictly inside another interval."""
    entries: dict[int, tuple[int, ...]] = {}
    exits: dict[int, tuple[int, ...]] = {}
    for spot_id, ivals in spot_intervals.items():
        ent = set()
        exi = set()
        for k, (s, e) in enumerate(ivals):
            if all(
                not (s2 < s <= e2)
                for m, (s2, e2) in enumerate(ivals)
                if m != k
            ):
                ent.add(s)
            if all(
                not (s2 <= e < e2)
                for m, (s2, e2) in enumerate(ivals)
                if m != k
            ):
                exi.add(e)
        if ent and exi:
            entries[spot_id] = tuple(sorted(ent))
            exits[spot_id] = tuple(sorted(exi))
    return TimeWindows(entries=entries, exits=exits)


def merge_windows(a: TimeWindows, b: TimeWindows) -> TimeWindows:
    """Union of candidate entry/exit steps per spot."""
    entries = {}
    exits = {}
    for sid in set(a.entries) | set(b.entries):
        entries[sid] = tuple(
            sorted(set(a.entries.get(sid, ())) | set(b.entries.get(sid, ())))
        )
    for sid in set(a.exits) | set(b.exits):
        exits[sid] = tuple(sorted(set(a.exits.get(sid, ())) | set(b.exits.get(sid, ()))))
    intervals = dict(a.intervals)
    intervals.update(b.intervals)
    return TimeWindows(entries=entries, exits=exits, intervals=intervals)


def windows_from_job_intervals(
    instance: Instance, job_intervals: dict[int, list[tuple[int, int]]]
) -> TimeWindows:
    """Entry/exit candidates from explicit per-job busy intervals."""
    spot_intervals: dict[int, list[tuple[int, int]]] = {}
    for spot in instance.spots:
        ivals = []
        for i in sorted(instance.covering_jobs(spot.id)):
            ivals.extend(job_intervals.get(i, []))
        if ivals:
            spot_intervals[spot.id] = ivals
    return _windows_from_intervals(instance, spot_intervals)


def input_based_windows(instance: Instance) -> TimeWindows:
    """Static pruning from job time windows (exact)."""
    spot_intervals: dict[int, list[tuple[int, int]]] = {}
    for spot in instance.spots:
        ivals = [
            (instance.job(i).window_start, instance.job(i).window_end)
            for i in sorted(instance.covering_jobs(spot.id))
        ]
        if ivals:
            spot_intervals[spot.id] = ivals
    return _windows_from_intervals(instance, spot_intervals)


def primal_windows(instance: Instance, solution: RmpSolution) -> TimeWindows:
    """Heuristic pruning from the incumbent mission work intervals."""
    job_intervals: dict[int, list[tuple[int, int]]] = {}
    for path, weight in solution.mission_weights.items():
        if weight <= WEIGHT_TOL:
            continue
        for job_id, start, end in path.visits:
            ival = (start, end)
            bucket = job_intervals.setdefault(job_id, [])
            if ival not in bucket:
                bucket.append(ival)
    spot_intervals: dict[int, list[tuple[int, int]]] = {}
    for spot in instance.spots:
        ivals = []
        for i in sorted(instance.covering_jobs(spot.id)):
            ivals.extend(job_intervals.get(i, []))
        if ivals:
            spot_intervals[spot.id] = ivals
    return _windows_from_intervals(instance, spot_intervals)


def dual_windows(instance: Instance, duals: DualPrices) -> TimeWindows:
    """Restriction to steps with positive linking duals (exact).

    Entries and exits are the positive-reward steps themselves; the
    recorded intervals are, per covered job, every contiguous run of its
    positive-dual steps (smallest interval per covered dual set).
    """
    entries: dict[int, tuple[int, ...]] = {}
    exits: dict[int, tuple[int, ...]] = {}
    intervals: dict[int, tuple[tuple[int, int], ...]] = {}
    positive_by_job: dict[int, list[int]] = {}
    for (i, t), v in duals.xi.items():
        if v > 0.0:
            positive_by_job.setdefault(i, []).append(t)
    for times in positive_by_job.values():
        times.sort()
    for spot in instance.spots:
        steps: set[int] = set()
        ivals: list[tuple[int, int]] = []
        for i in sorted(instance.covering_jobs(spot.id)):
            times = positive_by_job.get(i)
            if not times:
                continue
            steps.update(times)
            for a in range(len(times)):
                for b in range(a, len(times)):
                    ivals.append((times[a], times[b]))
        if steps:
            entries[spot.id] = tuple(sorted(steps))
            exits[spot.id] = tuple(sorted(steps))
            intervals[spot.id] = tuple(sorted(set(ivals)))
    return TimeWindows(entries=entries, exits=exits, intervals=intervals)


class _Rewards:
    """Pooled per-spot rewards r_j(t) = sum of xi over covered jobs."""

    def __init__(self, instance: Instance, duals: DualPrices):
        self.instance = instance
        horizon = instance.horizon
        self.per_spot: dict[int, np.ndarray] = {}
        self.positive: dict[int, list[int]] = {}
        self.prefix: dict[int, np.ndarray] = {}
        for spot in instance.spots:
            arr = np.zeros(horizon + 1)
            for i in instance.covering_jobs(spot.id):
                job = instance.job(i)
                for t in range(job.window_start, job.window_end + 1):
                    v = duals.xi.get((i, t), 0.0)
                    if v:
                        arr[t] += v
            self.per_spot[spot.id] = arr
            self.positive[spot.id] = [t for t in range(horizon + 1) if arr[t] > 0.0]
            self.prefix[spot.id] = np.concatenate([[0.0], np.cumsum(arr)])

    def stay_reward(self, spot_id: int, a: int, d: int) -> float:
        pre = self.prefix[spot_id]
        return float(pre[d + 1] - pre[a])

    def shrink(self, spot_id: int, a: int, d: int) -> tuple[int, int] | None:
        """Smallest sub-interval of [a, d] holding its positive steps."""
        pos = self.positive[spot_id]
        if not pos:
            return None
        import bisect

        lo = bisect.bisect_left(pos, a)
        hi = bisect.bisect_right(pos, d) - 1
        if lo > hi:
            return None
        return (pos[lo], pos[hi])


def price_emitting(
    instance: Instance,
    duals: DualPrices,
    windows: TimeWindows,
    cap: int | None = None,
    epsilon: float = EPS_RC,
    dual_prune: bool = True,
    allow_zero_reward_stays: bool = False,
    prefix_spots: Sequence[int] = (),
    restrict_spots: Iterable[int] | None = None,
    harvest_all: bool = False,
    max_paths: int | None = None,
    dominance: bool = True,
    stats: dict | None = None,
) -> list[EmittingPath]:
    """Emitter columns with reduced cost < -epsilon, deepest first.

    With ``dual_prune`` candidate stays are shrunk to their positive-dual
    support and rewardless stays are dropped (no loss of optimality).
    ``prefix_spots``/``restrict_spots``/``harvest_all`` serve the
    stem-constrained regeneration, where every feasible completion is
    collected and stays must retain coverage value, so shrinking is off;
    regeneration also disables dominance, which is sound for the minimum
    but deliberately discards alternative routes.
    """
    rewards = _Rewards(instance, duals)
    spot_ids = [s.id for s in instance.spots]
    idx_of = {sid: k for k, sid in enumerate(spot_ids)}
    horizon = instance.horizon

    allowed = set(spot_ids if restrict_spots is None else restrict_spots)

    return_tt = {sid: instance.emitter_tt(sid, None) for sid in spot_ids}
    return_dist = {sid: instance.emitter_dist(sid, None) for sid in spot_ids}

    def candidate_stays(spot_id: int, arrival: int) -> list[tuple[int, int]]:
        ents = [a for a in windows.spot_entries(spot_id) if a >= arrival]
        exis = windows.spot_exits(spot_id)
        out = set()
        latest = horizon - return_tt[spot_id]
        for a in ents:
            for d in exis:
                if d < a:
                    continue
                if dual_prune:
                    # Shrink first: the tail beyond the return deadline may
                    # carry no reward anyway.
                    shrunk = rewards.shrink(spot_id, a, d)
                    if shrunk is None or shrunk[1] > latest:
                        continue
                    out.add(shrunk)
                else:
                    if d > latest:
                        continue
                    if (
                        not allow_zero_reward_stays
                        and rewards.stay_reward(spot_id, a, d) <= 0.0
                    ):
                        continue
                    out.add((a, d))
        return sorted(out)

    best_at: dict[tuple[int, int], float] = {}
    frontier = [EmitterLabel(spot=-1, time=0, rc=duals.beta)]
    for sid in prefix_spots:
        grown: list[EmitterLabel] = []
        for label in frontier:
            src = None if label.spot < 0 else spot_ids[label.spot]
            arrival = label.time + instance.emitter_tt(src, sid)
            if arrival > horizon:
                continue
            for a, d in candidate_stays(sid, arrival):
                rc = (
                    label.rc
                    + instance.emitter_dist(src, sid)
                    - rewards.stay_reward(sid, a, d)
                )
                state = (idx_of[sid], d + 1)
                seen = best_at.get(state)
                if dominance and seen is not None and rc >= seen - 1e-12:
                    continue
                if seen is None or rc < seen:
                    best_at[state] = rc
                grown.append(
                    EmitterLabel(
                        spot=idx_of[sid], time=d + 1, rc=rc, parent=label, arrive=a, depart=d
                    )
                )
        frontier = grown
        if not frontier:
            if stats is not None:
                stats["min_reduced_cost"] = np.inf
            return []

    queue: deque[EmitterLabel] = deque(frontier)
    completed: dict[tuple, tuple[float, EmitterLabel]] = {}
    min_rc = np.inf

    def close(label: EmitterLabel) -> None:
        nonlocal min_rc
        if label.spot < 0:
            return
        total = label.rc + return_dist[spot_ids[label.spot]]
        if total < min_rc:
            min_rc = total
        if not harvest_all and total >= -epsilon:
            return
        key = _stay_key(label)
        old = completed.get(key)
        if old is None or total < old[0]:
            completed[key] = (total, label)

    for label in queue:
        close(label)

    while queue:
        label = queue.popleft()
        src = None if label.spot < 0 else spot_ids[label.spot]
        for sid in spot_ids:
            if sid not in allowed:
                continue
            arrival = label.time + instance.emitter_tt(src, sid)
            if arrival > horizon:
                continue
            for a, d in candidate_stays(sid, arrival):
                reward = rewards.stay_reward(sid, a, d)
                rc = label.rc + instance.emitter_dist(src, sid) - reward
                state = (idx_of[sid], d + 1)
                seen = best_at.get(state)
                if dominance and seen is not None and rc >= seen - 1e-12:
                    continue
                if seen is None or rc < seen:
                    best_at[state] = rc
                cand = EmitterLabel(
                    spot=idx_of[sid], time=d + 1, rc=rc, parent=label, arrive=a, depart=d
                )
                close(cand)
                if max_paths is not None and len(completed) >= max_paths:
                    queue.clear()
                    break
                queue.append(cand)
            else:
                continue
            break

    if stats is not None:
        stats["min_reduced_cost"] = float(min_rc)

    ranked = sorted(completed.values(), key=lambda pair: pair[0])
    if cap is not None:
        ranked = ranked[:cap]
    return [_to_path(instance, spot_ids, label) for _, label in ranked]


def inflate_stays(instance: Instance, path: EmittingPath) -> EmittingPath:
    """Maximal-span copy of a path: same spot sequence and travel cost,
    every stay widened as far as its neighbors and the horizon allow.

    Widening is free (staying costs nothing) and only adds coverage, so
    the inflated column weakly dominates the original in the master.
    """
    stays = list(path.stays)
    spots = [s for s, _, _ in stays]
    arrivals: list[int] = []
    prev_spot: int | None = None
    prev_depart = -1  # depot departure happens at step 0
    for k, (spot, a, d) in enumerate(stays):
        free = 0 if k == 0 else prev_depart + 1
        # Always <= a: the original path is feasible.
        arrivals.append(free + instance.emitter_tt(prev_spot, spot))
        prev_spot, prev_depart = spot, d
    departs = [0] * len(stays)
    for k in range(len(stays) - 1, -1, -1):
        spot, a, d = stays[k]
        if k == len(stays) - 1:
            latest = instance.horizon - instance.emitter_tt(spot, None)
        else:
            latest = arrivals[k + 1] - 1 - instance.emitter_tt(spot, spots[k + 1])
        departs[k] = max(d, latest)
    inflated = [
        (spots[k], arrivals[k], departs[k]) for k in range(len(stays))
    ]
    return EmittingPath.build(instance, inflated)


def price_emitting_unpruned(
    instance: Instance,
    duals: DualPrices,
    cap: int | None = None,
    epsilon: float = EPS_RC,
    stats: dict | None = None,
) -> list[EmittingPath]:
    """Reference search over the fully time-expanded network (tiny sizes)."""
    return price_emitting(
        instance,
        duals,
        full_windows(instance),
        cap=cap,
        epsilon=epsilon,
        dual_prune=False,
        allow_zero_reward_stays=True,
        stats=stats,
    )


def _stay_key(label: EmitterLabel) -> tuple:
    key = []
    cur = label
    while cur is not None and cur.spot >= 0:
        key.append((cur.spot, cur.arrive, cur.depart))
        cur = cur.parent
    return tuple(reversed(key))


def _to_path(instance: Instance, spot_ids: list[int], label: EmitterLabel) -> EmittingPath:
    stays = []
    cur = label
    while cur is not None and cur.spot >= 0:
        stays.append((spot_ids[cur.spot], cur.arrive, cur.depart))
        cur = cur.parent
    stays.reverse()
    return EmittingPath.build(instance, stays)
