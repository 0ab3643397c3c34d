"""Embedded linear-programming engine.

A dense bounded-variable revised simplex (two-phase, explicit basis
inverse) plus a depth-first branch-and-bound wrapper for 0/1 integer
solves.  Built for the small dense master problems this package produces;
not a general-purpose large-scale LP code.

Dual sign convention under minimization: for a ``<=`` row the reported
dual is <= 0, for a ``>=`` row it is >= 0, and equality rows are free.
Equivalently, duals are y = c_B B^-1 with slack columns of coefficient +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LEQ = "<="
EQ = "=="
GEQ = ">="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

_FEAS_TOL = 1e-7
_PIVOT_TOL = 1e-9
_RC_TOL = 1e-9
_STALL_LIMIT = 400


class LpError(RuntimeError):
    pass


@dataclass
class LpProblem:
    """Minimization problem built incrementally by rows and columns."""

    name: str = "lp"
    obj: list[float] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    senses: list[str] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)
    # Sparse row form: per row, parallel (col indices, coefficients).
    rows: list[tuple[list[int], list[float]]] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return len(self.obj)

    @property
    def num_rows(self) -> int:
        return len(self.rhs)

    def _bump_version(self) -> None:
        self.__dict__["_version"] = self.__dict__.get("_version", 0) + 1
        self.__dict__.pop("_work_cache", None)

    def add_var(self, obj: float, lb: float = 0.0, ub: float = np.inf) -> int:
        if not np.isfinite(lb):
            raise LpError("variable lower bounds must be finite")
        if ub < lb:
            raise LpError(f"variable bounds crossed: [{lb}, {ub}]")
        self._bump_version()
        self.obj.append(float(obj))
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        return len(self.obj) - 1

    def add_row(
        self,
        sense: str,
        rhs: float,
        coeffs: Iterable[tuple[int, float]] = (),
        name: str = "",
    ) -> int:
        if sense not in (LEQ, EQ, GEQ):
            raise LpError(f"unknown row sense {sense!r}")
        self._bump_version()
        idx: list[int] = []
        val: list[float] = []
        for j, a in coeffs:
            if not 0 <= j < self.num_vars:
                raise LpError(f"row references unknown variable {j}")
            if a != 0.0:
                idx.append(int(j))
                val.append(float(a))
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.rows.append((idx, val))
        self.row_names.append(name or f"r{len(self.rhs) - 1}")
        return len(self.rhs) - 1

    def set_entry(self, row: int, col: int, coeff: float) -> None:
        """Append a coefficient to an existing row (used when adding columns)."""
        if not 0 <= col < self.num_vars:
            raise LpError(f"unknown variable {col}")
        self._bump_version()
        idx, val = self.rows[row]
        idx.append(int(col))
        val.append(float(coeff))

    def dense_matrix(self) -> np.ndarray:
        a = np.zeros((self.num_rows, self.num_vars))
        for i, (idx, val) in enumerate(self.rows):
            if idx:
                np.add.at(a[i], idx, val)
        return a

    def work_matrix(self) -> np.ndarray:
        """Cached [A | I] used by the simplex; shared read-only across
        solves until the problem is modified."""
        version = self.__dict__.get("_version", 0)
        cache = self.__dict__.get("_work_cache")
        if cache is not None and cache[0] == version:
            return cache[1]
        m, n = self.num_rows, self.num_vars
        w = np.zeros((m, n + m))
        w[:, :n] = self.dense_matrix()
        w[:, n:] = np.eye(m)
        self.__dict__["_work_cache"] = (version, w)
        return w


@dataclass
class LpBasis:
    """Opaque warm-start token: basic column ids and nonbasic bound sides."""

    cols: np.ndarray
    at_upper: np.ndarray  # over structural + slack columns
    n_vars: int = 0  # structural count when the basis was recorded

    def remapped(self, new_n: int, m: int) -> "LpBasis":
        """Shift slack indices when structural columns were appended."""
        old_n = self.n_vars
        if old_n == new_n:
            return self
        cols = self.cols.copy()
        cols[cols >= old_n] += new_n - old_n
        at_upper = np.zeros(new_n + m, dtype=bool)
        keep = min(old_n, new_n)
        at_upper[:keep] = self.at_upper[:keep]
        at_upper[new_n : new_n + m] = self.at_upper[old_n : old_n + m]
        return LpBasis(cols=cols, at_upper=at_upper, n_vars=new_n)


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    basis: LpBasis | None = None
    infeasible_rows: list[int] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Working arrays for one solve: structural + slack (+ artificial) cols."""

    def __init__(self, p: LpProblem, lb=None, ub=None):
        m, n = p.num_rows, p.num_vars
        self.m, self.n = m, n
        # Shared read-only across solves; artificial columns hstack a copy.
        self.A = p.work_matrix()
        self.c = np.concatenate([np.asarray(p.obj, dtype=float), np.zeros(m)])
        self.b = np.asarray(p.rhs, dtype=float)
        self.lo = np.concatenate(
            [np.asarray(lb if lb is not None else p.lb, dtype=float), np.zeros(m)]
        )
        self.hi = np.concatenate(
            [np.asarray(ub if ub is not None else p.ub, dtype=float), np.zeros(m)]
        )
        for i, sense in enumerate(p.senses):
            if sense == LEQ:
                self.hi[n + i] = np.inf
            elif sense == GEQ:
                self.lo[n + i] = -np.inf
            # EQ keeps the fixed [0, 0] slack.

    def add_artificial(self, row: int, sign: float) -> int:
        col = np.zeros((self.m, 1))
        col[row, 0] = sign
        self.A = np.hstack([self.A, col])
        self.c = np.append(self.c, 0.0)
        self.lo = np.append(self.lo, 0.0)
        self.hi = np.append(self.hi, np.inf)
        return self.A.shape[1] - 1


class _Simplex:
    def __init__(self, tab: _Tableau, iteration_limit: int):
        self.t = tab
        self.iteration_limit = iteration_limit
        self.iterations = 0
        ncols = tab.A.shape[1]
        self.x = np.zeros(ncols)
        self.at_upper = np.zeros(ncols, dtype=bool)
        self.basis = np.empty(tab.m, dtype=int)
        self.basic_mask = np.zeros(ncols, dtype=bool)
        self.binv = np.eye(tab.m)
        self._since_refactor = 0

    # ---- setup ----

    def cold_start(self) -> list[int]:
        """Slack basis; returns rows whose slack starts out of bounds."""
        t = self.t
        for j in range(t.n):
            self.x[j] = t.lo[j]
            self.at_upper[j] = False
        self.basis = np.arange(t.n, t.n + t.m)
        self.basic_mask[:] = False
        self.basic_mask[self.basis] = True
        self.binv = np.eye(t.m)
        resid = t.b - t.A[:, : t.n] @ self.x[: t.n]
        self.x[self.basis] = resid
        bad = []
        for i in range(t.m):
            v = resid[i]
            if v < t.lo[t.n + i] - _FEAS_TOL or v > t.hi[t.n + i] + _FEAS_TOL:
                bad.append(i)
        return bad

    def warm_start(self, basis: LpBasis) -> str:
        """Load a previous basis; returns 'feasible', 'primal_infeasible',
        or 'invalid' (caller falls back to a cold start)."""
        t = self.t
        cols = np.asarray(basis.cols, dtype=int)
        if cols.shape != (t.m,) or cols.min() < 0 or cols.max() >= t.n + t.m:
            return "invalid"
        b_mat = t.A[:, cols]
        try:
            binv = np.linalg.inv(b_mat)
        except np.linalg.LinAlgError:
            return "invalid"
        if not np.all(np.isfinite(binv)):
            return "invalid"
        self.basis = cols.copy()
        self.basic_mask[:] = False
        self.basic_mask[cols] = True
        self.binv = binv
        for j in range(t.n + t.m):
            if self.basic_mask[j]:
                continue
            up = j < len(basis.at_upper) and bool(basis.at_upper[j])
            if up and not np.isfinite(t.hi[j]):
                up = False
            if not up and not np.isfinite(t.lo[j]):
                up = True
            self.at_upper[j] = up
            self.x[j] = t.hi[j] if up else t.lo[j]
            if not np.isfinite(self.x[j]):
                return "invalid"
        xb = self.binv @ (t.b - self._nonbasic_contrib())
        self.x[self.basis] = xb
        lo_b, hi_b = t.lo[self.basis], t.hi[self.basis]
        if np.any(xb < lo_b - 1e-6) or np.any(xb > hi_b + 1e-6):
            return "primal_infeasible"
        return "feasible"

    def dual_feasible(self, costs: np.ndarray) -> bool:
        y = costs[self.basis] @ self.binv
        rc = costs - y @ self.t.A
        nb = ~self.basic_mask & (self.t.hi - self.t.lo > _PIVOT_TOL)
        bad_lb = nb & ~self.at_upper & (rc < -1e-7)
        bad_ub = nb & self.at_upper & (rc > 1e-7)
        return not (np.any(bad_lb) or np.any(bad_ub))

    def dual_run(self, costs: np.ndarray) -> str:
        """Bounded dual simplex: restores primal feasibility from a dual
        feasible basis after variable bounds were tightened."""
        t = self.t
        while True:
            if self.iterations >= self.iteration_limit:
                return ITERATION_LIMIT
            self.iterations += 1
            if self._since_refactor >= 500:
                self.refactor()
            xb = self.x[self.basis]
            below = t.lo[self.basis] - xb
            above = xb - t.hi[self.basis]
            below = np.where(np.isfinite(below), below, -np.inf)
            above = np.where(np.isfinite(above), above, -np.inf)
            worst = np.maximum(below, above)
            r = int(np.argmax(worst))
            if worst[r] <= 1e-9:
                return OPTIMAL
            leaving_below = below[r] >= above[r]
            target = t.lo[self.basis[r]] if leaving_below else t.hi[self.basis[r]]
            brow = self.binv[r] @ t.A
            y = costs[self.basis] @ self.binv
            rc = costs - y @ t.A
            nb = ~self.basic_mask & (t.hi - t.lo > _PIVOT_TOL)
            if leaving_below:
                eligible = nb & (
                    (~self.at_upper & (brow < -_PIVOT_TOL))
                    | (self.at_upper & (brow > _PIVOT_TOL))
                )
            else:
                eligible = nb & (
                    (~self.at_upper & (brow > _PIVOT_TOL))
                    | (self.at_upper & (brow < -_PIVOT_TOL))
                )
            cand = np.where(eligible)[0]
            if cand.size == 0:
                return INFEASIBLE
            ratios = np.abs(rc[cand]) / np.abs(brow[cand])
            best = ratios.min()
            ties = cand[ratios <= best + 1e-12]
            j = int(ties[np.argmax(np.abs(brow[ties]))])
            # Pivot: basic r leaves at its violated bound, j enters.
            d = self.binv @ t.A[:, j]
            alpha = d[r]
            if abs(alpha) < _PIVOT_TOL:
                self.refactor()
                continue
            delta = (xb[r] - target) / alpha
            leaving = int(self.basis[r])
            self.x[self.basis] = xb - d * delta
            self.x[leaving] = target
            self.at_upper[leaving] = not leaving_below
            new_xj = self.x[j] + delta
            self.basis[r] = j
            self.basic_mask[leaving] = False
            self.basic_mask[j] = True
            self.x[j] = new_xj
            row = self.binv[r] / alpha
            self.binv -= np.outer(d, row)
            self.binv[r] = row
            self._since_refactor += 1

    def _nonbasic_contrib(self) -> np.ndarray:
        t = self.t
        nb = ~self.basic_mask
        xnb = self.x.copy()
        xnb[self.basic_mask] = 0.0
        nz = nb & (xnb != 0.0)
        if not np.any(nz):
            return np.zeros(t.m)
        return t.A[:, nz] @ xnb[nz]

    def refactor(self) -> None:
        self.binv = np.linalg.inv(self.t.A[:, self.basis])
        self.x[self.basis] = self.binv @ (self.t.b - self._nonbasic_contrib())
        self._since_refactor = 0

    # ---- core iteration ----

    def run(self, costs: np.ndarray) -> str:
        t = self.t
        stall = 0
        while True:
            if self.iterations >= self.iteration_limit:
                return ITERATION_LIMIT
            self.iterations += 1
            if self._since_refactor >= 500:
                self.refactor()
            y = costs[self.basis] @ self.binv
            rc = costs - y @ t.A
            free_range = t.hi - t.lo > _PIVOT_TOL
            nb = ~self.basic_mask & free_range
            down_ok = nb & ~self.at_upper & (rc < -_RC_TOL)
            up_ok = nb & self.at_upper & (rc > _RC_TOL)
            cand = np.where(down_ok | up_ok)[0]
            if cand.size == 0:
                return OPTIMAL
            if stall > _STALL_LIMIT:
                j = int(cand[0])  # Bland: lowest index
            else:
                j = int(cand[np.argmax(np.abs(rc[cand]))])
            direction = -1.0 if self.at_upper[j] else 1.0
            d = self.binv @ t.A[:, j]
            # Entering variable moves by step >= 0; basic values move by
            # -direction * step * d.
            limit = t.hi[j] - t.lo[j]
            leave_row = -1
            leave_to_upper = False
            delta = -direction * d
            with np.errstate(divide="ignore", invalid="ignore"):
                lo_room = self.x[self.basis] - t.lo[self.basis]
                hi_room = t.hi[self.basis] - self.x[self.basis]
                steps = np.full(t.m, np.inf)
                dec = delta < -_PIVOT_TOL
                steps[dec] = lo_room[dec] / -delta[dec]
                inc = delta > _PIVOT_TOL
                steps_inc = hi_room[inc] / delta[inc]
                steps[inc] = steps_inc
            steps = np.maximum(steps, 0.0)
            rmin = float(steps.min()) if t.m else np.inf
            if rmin < limit:
                ties = np.where(steps <= rmin + 1e-12)[0]
                if stall > _STALL_LIMIT:
                    leave_row = int(ties[np.argmin(self.basis[ties])])
                else:
                    leave_row = int(ties[np.argmax(np.abs(d[ties]))])
                step = float(steps[leave_row])
                leave_to_upper = delta[leave_row] > 0
            else:
                step = limit
            if not np.isfinite(step):
                return UNBOUNDED
            stall = stall + 1 if step <= 1e-10 else 0
            # Apply the move.
            self.x[self.basis] += delta * step
            if leave_row < 0:
                # Bound flip, basis unchanged.
                self.at_upper[j] = not self.at_upper[j]
                self.x[j] = t.hi[j] if self.at_upper[j] else t.lo[j]
                continue
            leaving = int(self.basis[leave_row])
            self.x[leaving] = t.hi[leaving] if leave_to_upper else t.lo[leaving]
            self.at_upper[leaving] = leave_to_upper
            entering_value = (t.hi[j] if self.at_upper[j] else t.lo[j]) + direction * step
            self.basis[leave_row] = j
            self.basic_mask[leaving] = False
            self.basic_mask[j] = True
            self.x[j] = entering_value
            # Product-form update of the basis inverse.
            piv = d[leave_row]
            if abs(piv) < _PIVOT_TOL:
                self.refactor()
                continue
            row = self.binv[leave_row] / piv
            self.binv -= np.outer(d, row)
            self.binv[leave_row] = row
            self._since_refactor += 1


def solve_lp(
    problem: LpProblem,
    warm: LpBasis | None = None,
    lb: Sequence[float] | None = None,
    ub: Sequence[float] | None = None,
    iteration_limit: int | None = None,
) -> LpSolution:
    """Optimal basic solution with row duals, or infeasible/unbounded status.

    ``lb``/``ub`` override the structural variable bounds (used by
    branch-and-bound); ``warm`` restarts from a previous basis when valid.
    """
    m, n = problem.num_rows, problem.num_vars
    if n == 0:
        raise LpError("problem has no variables")
    tab = _Tableau(problem, lb=lb, ub=ub)
    if np.any(np.asarray(tab.lo[:n]) > np.asarray(tab.hi[:n]) + 1e-12):
        return LpSolution(status=INFEASIBLE, infeasible_rows=[])
    limit = iteration_limit or max(2000, 60 * (n + 2 * m))
    sx = _Simplex(tab, limit)

    warmed = False
    if warm is not None:
        state = sx.warm_start(warm.remapped(n, m))
        if state == "feasible":
            warmed = True
        elif state == "primal_infeasible" and sx.dual_feasible(tab.c):
            status = sx.dual_run(tab.c)
            if status == OPTIMAL:
                warmed = True
            elif status == INFEASIBLE:
                return LpSolution(
                    status=INFEASIBLE, stats={"iterations": sx.iterations}
                )
            # iteration limit: fall through to a cold start
        if not warmed:
            sx = _Simplex(tab, limit)
    art_cols: list[int] = []
    if not warmed:
        bad_rows = sx.cold_start()
        if bad_rows:
            for i in bad_rows:
                slack = n + i
                # Park the slack at its nearest finite bound.
                v = sx.x[slack]
                if v > tab.hi[slack]:
                    park = tab.hi[slack]
                else:
                    park = tab.lo[slack]
                sx.x[slack] = park
                sx.at_upper[slack] = park == tab.hi[slack] and np.isfinite(tab.hi[slack])
                sx.basic_mask[slack] = False
                resid = v - park
                sign = 1.0 if resid > 0 else -1.0
                a_col = tab.add_artificial(i, sign)
                _grow(sx, tab)
                sx.basis[i] = a_col
                sx.basic_mask[a_col] = True
                sx.x[a_col] = abs(resid)
                art_cols.append(a_col)
            sx.refactor()  # artificial columns may flip basis signs
            phase1_costs = np.zeros(tab.A.shape[1])
            phase1_costs[art_cols] = 1.0
            status = sx.run(phase1_costs)
            if status != OPTIMAL:
                return LpSolution(status=status if status == ITERATION_LIMIT else INFEASIBLE)
            infeas = float(sx.x[art_cols].sum())
            scale = 1.0 + (np.abs(tab.b).max() if m else 0.0)
            if infeas > 1e-7 * scale:
                rows = [
                    int(np.where(sx.basis == a)[0][0])
                    for a in art_cols
                    if sx.basic_mask[a] and sx.x[a] > 1e-7
                ]
                return LpSolution(status=INFEASIBLE, infeasible_rows=rows)
            _evict_artificials(sx, tab, art_cols)
            # Freeze artificials so phase 2 cannot reuse them.
            for a in art_cols:
                tab.lo[a] = 0.0
                tab.hi[a] = 0.0
                sx.x[a] = 0.0

    costs = tab.c.copy()  # artificial columns already carry cost 0
    status = sx.run(costs)
    if status != OPTIMAL:
        return LpSolution(status=status, stats={"iterations": sx.iterations})
    sx.refactor()
    status = sx.run(costs)  # clean up any drift exposed by refactoring
    if status != OPTIMAL:
        return LpSolution(status=status, stats={"iterations": sx.iterations})
    y = costs[sx.basis] @ sx.binv
    x = sx.x[:n].copy()
    obj = float(np.asarray(problem.obj) @ x)
    resid = _residuals(problem, x)
    basis = LpBasis(
        cols=sx.basis.copy(), at_upper=sx.at_upper[: n + m].copy(), n_vars=n
    )
    return LpSolution(
        status=OPTIMAL,
        x=x,
        duals=np.asarray(y, dtype=float),
        objective=obj,
        basis=basis,
        stats={"iterations": sx.iterations, "max_residual": resid},
    )


def _grow(sx: _Simplex, tab: _Tableau) -> None:
    """Extend simplex arrays after an artificial column was appended."""
    extra = tab.A.shape[1] - sx.x.shape[0]
    if extra <= 0:
        return
    sx.x = np.append(sx.x, np.zeros(extra))
    sx.at_upper = np.append(sx.at_upper, np.zeros(extra, dtype=bool))
    sx.basic_mask = np.append(sx.basic_mask, np.zeros(extra, dtype=bool))


def _evict_artificials(sx: _Simplex, tab: _Tableau, art_cols: list[int]) -> None:
    """Pivot zero-valued artificials out of the basis where possible."""
    art_set = set(art_cols)
    for a in art_cols:
        if not sx.basic_mask[a]:
            continue
        row = int(np.where(sx.basis == a)[0][0])
        brow = sx.binv[row]
        pivot_col = -1
        for j in range(tab.A.shape[1]):
            if sx.basic_mask[j] or j in art_set or tab.hi[j] - tab.lo[j] <= _PIVOT_TOL:
                continue
            if abs(brow @ tab.A[:, j]) > 1e-7:
                pivot_col = j
                break
        if pivot_col < 0:
            continue  # redundant row; artificial stays basic at zero
        d = sx.binv @ tab.A[:, pivot_col]
        piv = d[row]
        nrow = sx.binv[row] / piv
        sx.binv -= np.outer(d, nrow)
        sx.binv[row] = nrow
        sx.basic_mask[a] = False
        sx.at_upper[a] = False
        sx.x[a] = 0.0
        sx.basis[row] = pivot_col
        sx.basic_mask[pivot_col] = True
        sx.x[pivot_col] = sx.binv[row] @ (tab.b - sx._nonbasic_contrib())


def _residuals(problem: LpProblem, x: np.ndarray) -> float:
    worst = 0.0
    for i, (idx, val) in enumerate(problem.rows):
        lhs = float(np.dot(x[idx], val)) if idx else 0.0
        rhs = problem.rhs[i]
        scale = max(1.0, abs(rhs))
        if problem.senses[i] == LEQ:
            worst = max(worst, (lhs - rhs) / scale)
        elif problem.senses[i] == GEQ:
            worst = max(worst, (rhs - lhs) / scale)
        else:
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def solve_binary(
    problem: LpProblem,
    binary_vars: Sequence[int],
    abs_gap: float = 1e-6,
    node_limit: int = 200_000,
    brancher=None,
    initial: tuple[np.ndarray, float] | None = None,
) -> LpSolution:
    """Optimal 0/1 assignment over ``binary_vars`` by depth-first B&B.

    Non-binary variables stay continuous.  The relaxation bound from
    ``solve_lp`` prunes subtrees; optimality is proved within ``abs_gap``.

    ``brancher(x, lb, ub)`` may return a list of child (lb, ub) bound
    overrides to branch on groups of variables (e.g. pair branching on
    partition structures); returning None falls back to the default
    most-fractional variable dichotomy.  ``initial`` seeds the incumbent
    with a known feasible assignment and its objective.
    """
    binary_vars = sorted(set(int(j) for j in binary_vars))
    lb0 = np.asarray(problem.lb, dtype=float).copy()
    ub0 = np.asarray(problem.ub, dtype=float).copy()
    ub0[binary_vars] = np.minimum(ub0[binary_vars], 1.0)

    root = solve_lp(problem, lb=lb0, ub=ub0)
    if not root.optimal:
        return root

    incumbent: LpSolution | None = None
    incumbent_obj = np.inf
    if initial is not None:
        incumbent_obj = float(initial[1])
    branch_nodes = 0
    stack: list[tuple[np.ndarray, np.ndarray, LpSolution]] = [(lb0, ub0, root)]
    while stack:
        lb, ub, sol = stack.pop()
        if sol.objective is not None and sol.objective >= incumbent_obj - abs_gap:
            continue
        frac_var = -1
        frac_dist = 0.0
        for j in binary_vars:
            v = sol.x[j]
            dist = abs(v - round(v))
            if dist > 1e-6 and dist > frac_dist:
                frac_dist = dist
                frac_var = j
        if frac_var < 0:
            if sol.objective < incumbent_obj - 1e-12:
                incumbent = sol
                incumbent_obj = sol.objective
            continue
        if branch_nodes >= node_limit:
            raise LpError(f"branch-and-bound node limit {node_limit} exceeded")

        child_bounds = None
        if brancher is not None:
            child_bounds = brancher(sol.x, lb, ub)
        if child_bounds is None:
            v = sol.x[frac_var]
            down = lb.copy(), ub.copy()
            down[1][frac_var] = 0.0
            up = lb.copy(), ub.copy()
            up[0][frac_var] = 1.0
            child_bounds = [down, up] if v < 0.5 else [up, down]

        children = []
        for clb, cub in child_bounds:
            child = solve_lp(problem, warm=sol.basis, lb=clb, ub=cub)
            branch_nodes += 1
            if child.optimal and child.objective < incumbent_obj - abs_gap:
                children.append((clb, cub, child))
        # Explore the strongest (lowest-bound) child first (pushed last).
        children.sort(key=lambda c: -c[2].objective)
        stack.extend(children)
    if incumbent is None:
        if initial is not None:
            # Nothing beat the seed; report it as the optimum.
            x = np.asarray(initial[0], dtype=float)
            return LpSolution(
                status=OPTIMAL,
                x=x,
                duals=root.duals,
                objective=float(initial[1]),
                basis=root.basis,
                stats={"branch_nodes": branch_nodes, "root_bound": root.objective},
            )
        return LpSolution(status=INFEASIBLE)
    incumbent.stats["branch_nodes"] = branch_nodes
    incumbent.stats["root_bound"] = root.objective
    return incumbent
