"""Pricing for mission paths: label-setting prize-collecting search.

States track (current job, visited set, free-to-travel step, reduced
cost).  Work is always scheduled at the earliest feasible step of each
visited job ("early job completion"), which keeps the search in the
physical network instead of the time-expanded one.  Dominated states are
pruned; completed states are closed at the depot and harvested when their
reduced cost clears the negativity threshold.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .instance import Instance
from .rmp import DualPrices, MissionPath

EPS_RC = 1e-6


@dataclass
class MissionLabel:
    node: int  # job index, or -1 for the depot
    visited: int  # bitmask over job indices
    time: int  # step from which the vehicle may travel
    rc: float
    parent: "MissionLabel | None" = None
    work_start: int = -1
    work_end: int = -1
    dead: bool = False


def dominates(a: MissionLabel, b: MissionLabel) -> bool:
    """True iff a is at the same node with visited(a) subseteq visited(b),
    no later, and no more expensive."""
    if a.node != b.node:
        raise ValueError("labels at different nodes are not comparable")
    return (
        (a.visited & ~b.visited) == 0
        and a.time <= b.time
        and a.rc <= b.rc + 1e-12
    )


class _Net:
    """Cached geometry and dual arrays for one pricing call."""

    def __init__(self, instance: Instance, duals: DualPrices):
        self.instance = instance
        jobs = instance.jobs
        self.n = len(jobs)
        self.job_ids = [j.id for j in jobs]
        self.ws = np.array([j.window_start for j in jobs])
        self.we = np.array([j.window_end for j in jobs])
        self.tau = np.array([j.workload for j in jobs])
        self.pi = np.array([duals.pi.get(j.id, 0.0) for j in jobs])
        # dist/tt matrices with the depot at index n
        n1 = self.n + 1
        self.dist = np.zeros((n1, n1))
        self.tt = np.zeros((n1, n1), dtype=int)
        ids = self.job_ids + [None]
        for a in range(n1):
            for b in range(n1):
                if a == b:
                    continue
                self.dist[a, b] = instance.mission_dist(ids[a], ids[b])
                self.tt[a, b] = instance.mission_tt(ids[a], ids[b])
        # prefix sums of xi over each job's window for O(1) interval sums
        self.xi_prefix = []
        for j in jobs:
            width = j.window_end - j.window_start + 1
            arr = np.zeros(width + 1)
            for k in range(width):
                arr[k + 1] = arr[k] + duals.xi.get((j.id, j.window_start + k), 0.0)
            self.xi_prefix.append(arr)

    def xi_sum(self, idx: int, start: int, end: int) -> float:
        base = self.ws[idx]
        pre = self.xi_prefix[idx]
        lo = max(start - base, 0)
        hi = min(end - base + 1, len(pre) - 1)
        if hi <= lo:
            return 0.0
        return float(pre[hi] - pre[lo])


def price_mission(
    instance: Instance,
    duals: DualPrices,
    cap: int | None = None,
    epsilon: float = EPS_RC,
    dominance: bool = True,
    allowed_start: Callable[[int, int], int | None] | None = None,
    prefix_jobs: Sequence[int] = (),
    restrict_jobs: Iterable[int] | None = None,
    harvest_all: bool = False,
    max_paths: int | None = None,
    stats: dict | None = None,
) -> list[MissionPath]:
    """Columns with reduced cost < -epsilon, deepest first (up to ``cap``).

    ``allowed_start(job_id, earliest)`` may delay a work start (next
    permitted step at or after ``earliest``) or veto the visit with None;
    used when coverage is fixed externally.  ``prefix_jobs`` forces the
    path to begin with the given job sequence and ``restrict_jobs`` limits
    later visits; together they implement stem-constrained regeneration.
    ``harvest_all`` collects every completed path regardless of sign.
    """
    net = _Net(instance, duals)
    n = net.n
    idx_of = {jid: k for k, jid in enumerate(net.job_ids)}
    depot = n

    allowed_mask = (1 << n) - 1
    if restrict_jobs is not None:
        allowed_mask = 0
        for jid in restrict_jobs:
            allowed_mask |= 1 << idx_of[jid]

    def extend(label: MissionLabel, nxt: int) -> MissionLabel | None:
        src = depot if label.node < 0 else label.node
        arrive = label.time + net.tt[src, nxt]
        start = max(arrive, int(net.ws[nxt]))
        if allowed_start is not None:
            delayed = allowed_start(net.job_ids[nxt], start)
            if delayed is None:
                return None
            start = delayed
        end = start + int(net.tau[nxt]) - 1
        if end > net.we[nxt]:
            return None
        rc = (
            label.rc
            + net.dist[src, nxt]
            - net.pi[nxt]
            + net.xi_sum(nxt, start, end)
        )
        return MissionLabel(
            node=nxt,
            visited=label.visited | (1 << nxt),
            time=end + 1,
            rc=rc,
            parent=label,
            work_start=start,
            work_end=end,
        )

    root = MissionLabel(node=-1, visited=0, time=0, rc=duals.rho)
    for jid in prefix_jobs:
        nxt = idx_of[jid]
        extended = extend(root, nxt)
        if extended is None:
            if stats is not None:
                stats["min_reduced_cost"] = np.inf
                stats["labels"] = 0
            return []
        root = extended

    store: dict[int, list[MissionLabel]] = {}
    queue: deque[MissionLabel] = deque([root])
    if root.node >= 0:
        store[root.node] = [root]

    completed: dict[tuple, tuple[float, MissionLabel]] = {}
    min_rc = np.inf
    labels_made = 0

    def close(label: MissionLabel) -> None:
        nonlocal min_rc
        total = label.rc + net.dist[label.node, depot]
        if total < min_rc:
            min_rc = total
        if not harvest_all and total >= -epsilon:
            return
        key = _visit_key(label)
        old = completed.get(key)
        if old is None or total < old[0]:
            completed[key] = (total, label)

    if root.node >= 0:
        close(root)

    while queue:
        label = queue.popleft()
        if label.dead:
            continue
        src_visited = label.visited
        for nxt in range(n):
            bit = 1 << nxt
            if src_visited & bit or not (allowed_mask & bit):
                continue
            cand = extend(label, nxt)
            if cand is None:
                continue
            labels_made += 1
            if dominance:
                bucket = store.setdefault(nxt, [])
                dominated = False
                for other in bucket:
                    if not other.dead and dominates(other, cand):
                        dominated = True
                        break
                if dominated:
                    continue
                for other in bucket:
                    if not other.dead and dominates(cand, other):
                        other.dead = True
                bucket[:] = [lab for lab in bucket if not lab.dead]
                bucket.append(cand)
            close(cand)
            if max_paths is not None and len(completed) >= max_paths:
                queue.clear()
                break
            queue.append(cand)

    if stats is not None:
        stats["min_reduced_cost"] = float(min_rc) if completed or min_rc < np.inf else np.inf
        stats["labels"] = labels_made

    ranked = sorted(completed.values(), key=lambda pair: pair[0])
    if cap is not None:
        ranked = ranked[:cap]
    return [_to_path(instance, label) for _, label in ranked]


def _visit_key(label: MissionLabel) -> tuple:
    key = []
    cur = label
    while cur is not None and cur.node >= 0:
        key.append((cur.node, cur.work_start, cur.work_end))
        cur = cur.parent
    return tuple(reversed(key))


def _to_path(instance: Instance, label: MissionLabel) -> MissionPath:
    visits = []
    cur = label
    while cur is not None and cur.node >= 0:
        visits.append((instance.jobs[cur.node].id, cur.work_start, cur.work_end))
        cur = cur.parent
    visits.reverse()
    return MissionPath.build(instance, visits)
