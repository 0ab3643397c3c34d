import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covroute import lp_core as lp


# ---------------------------------------------------------------------------
# Independent oracle: textbook full-tableau simplex for
#     min c x  s.t.  A x <= b,  x >= 0,  b >= 0
# (feasible origin, Bland's rule), kept deliberately naive.
# ---------------------------------------------------------------------------


def tableau_simplex(c, A, b):
    m, n = A.shape
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :n] = c
    basis = list(range(n, n + m))
    for _ in range(10_000):
        col = next((j for j in range(n + m) if tab[m, j] < -1e-10), None)
        if col is None:
            x = np.zeros(n + m)
            for i, bj in enumerate(basis):
                x[bj] = tab[i, -1]
            return float(-tab[m, -1] * -1.0), x[:n]
        ratios = [
            (tab[i, -1] / tab[i, col], i)
            for i in range(m)
            if tab[i, col] > 1e-10
        ]
        if not ratios:
            return None, None  # unbounded
        _, row = min(ratios)
        piv = tab[row, col]
        tab[row] /= piv
        for i in range(m + 1):
            if i != row:
                tab[i] -= tab[i, col] * tab[row]
        basis[row] = col
    raise RuntimeError("tableau simplex did not converge")


def tableau_value(c, A, b):
    # minimize: run on min directly via cost row = c
    m, n = A.shape
    obj, x = tableau_simplex(np.asarray(c, float), np.asarray(A, float), np.asarray(b, float))
    if x is None:
        return None
    return float(np.dot(c, x))


class TestSolveLp:
    def test_single_bound_constraint(self):
        p = lp.LpProblem()
        x = p.add_var(obj=1.0)
        p.add_row(lp.GEQ, 3.0, [(x, 1.0)])
        sol = lp.solve_lp(p)
        assert sol.optimal
        assert sol.x[x] == pytest.approx(3.0)
        assert sol.duals[0] == pytest.approx(1.0)
        assert sol.objective == pytest.approx(3.0)

    def test_degenerate_tied_optimum(self):
        p = lp.LpProblem()
        a = p.add_var(1.0)
        b = p.add_var(1.0)
        p.add_row(lp.GEQ, 2.0, [(a, 1.0), (b, 1.0)])
        p.add_row(lp.LEQ, 2.0, [(a, 1.0), (b, 1.0)])
        sol = lp.solve_lp(p)
        assert sol.optimal
        assert sol.objective == pytest.approx(2.0)
        # complementary slackness: either dual may carry the weight, but
        # reduced costs of both variables must vanish at a tied optimum
        y = sol.duals
        rc = np.array([1.0, 1.0]) - (y[0] + y[1])
        assert np.allclose(rc, 0.0, atol=1e-9)

    def test_random_lps_match_naive_tableau(self):
        rng = np.random.default_rng(2024)
        for _ in range(25):
            m, n = 20, 40
            A = rng.uniform(0.0, 2.0, size=(m, n))
            b = rng.uniform(1.0, 10.0, size=m)
            c = rng.uniform(0.1, 3.0, size=n) - 1.5
            p = lp.LpProblem()
            for j in range(n):
                p.add_var(float(c[j]))
            for i in range(m):
                p.add_row(lp.LEQ, float(b[i]), [(j, float(A[i, j])) for j in range(n)])
            sol = lp.solve_lp(p)
            ref = tableau_value(c, A, b)
            if ref is None:
                assert sol.status == lp.UNBOUNDED
            else:
                assert sol.optimal
                assert sol.objective == pytest.approx(ref, abs=1e-6)

    def test_infeasible_reported(self):
        p = lp.LpProblem()
        a = p.add_var(1.0, ub=1.0)
        p.add_row(lp.GEQ, 3.0, [(a, 1.0)])
        sol = lp.solve_lp(p)
        assert sol.status == lp.INFEASIBLE
        assert sol.infeasible_rows == [0]

    def test_unbounded_reported(self):
        p = lp.LpProblem()
        a = p.add_var(-1.0)
        p.add_row(lp.GEQ, 0.0, [(a, 1.0)])
        assert lp.solve_lp(p).status == lp.UNBOUNDED

    def test_dual_sign_convention(self):
        # min x + y subject to x >= 1 (geq), x + y <= 5 (leq), y == 2 (eq)
        p = lp.LpProblem()
        x = p.add_var(1.0)
        y = p.add_var(1.0)
        r1 = p.add_row(lp.GEQ, 1.0, [(x, 1.0)])
        r2 = p.add_row(lp.LEQ, 5.0, [(x, 1.0), (y, 1.0)])
        r3 = p.add_row(lp.EQ, 2.0, [(y, 1.0)])
        sol = lp.solve_lp(p)
        assert sol.optimal
        assert sol.duals[r1] >= -1e-9
        assert sol.duals[r2] <= 1e-9

    def test_feasibility_residuals(self):
        rng = np.random.default_rng(7)
        p = lp.LpProblem()
        n = 30
        for j in range(n):
            p.add_var(float(rng.uniform(0.5, 2.0)), ub=4.0)
        for i in range(12):
            cols = rng.choice(n, 6, replace=False)
            p.add_row(
                lp.GEQ, float(rng.uniform(1, 4)), [(int(j), 1.0) for j in cols]
            )
        sol = lp.solve_lp(p)
        assert sol.optimal
        assert sol.stats["max_residual"] <= 1e-7

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_strong_duality_on_random_covers(self, seed):
        rng = np.random.default_rng(seed)
        n, m = 12, 6
        p = lp.LpProblem()
        costs = rng.uniform(0.5, 2.0, n)
        for j in range(n):
            p.add_var(float(costs[j]))
        rows = []
        for i in range(m):
            cols = rng.choice(n, 4, replace=False)
            rhs = float(rng.uniform(1, 3))
            rows.append((cols, rhs))
            p.add_row(lp.GEQ, rhs, [(int(j), 1.0) for j in cols])
        sol = lp.solve_lp(p)
        assert sol.optimal
        dual_obj = sum(y * rhs for y, (_, rhs) in zip(sol.duals, rows))
        assert dual_obj == pytest.approx(sol.objective, abs=1e-6)


class TestSolveBinary:
    def test_knapsack_against_enumeration(self):
        rng = np.random.default_rng(5)
        vals = rng.uniform(1, 10, 5)
        wts = rng.uniform(1, 6, 5)
        W = float(wts.sum() * 0.45)
        p = lp.LpProblem()
        for j in range(5):
            p.add_var(-float(vals[j]), 0.0, 1.0)
        p.add_row(lp.LEQ, W, [(j, float(wts[j])) for j in range(5)])
        sol = lp.solve_binary(p, range(5))
        best = min(
            -float(np.dot(mask, vals))
            for mask in itertools.product([0, 1], repeat=5)
            if np.dot(mask, wts) <= W + 1e-12
        )
        assert sol.objective == pytest.approx(best, abs=1e-9)

    def test_integral_root_takes_zero_branch_nodes(self):
        p = lp.LpProblem()
        a = p.add_var(1.0, 0.0, 1.0)
        b = p.add_var(2.0, 0.0, 1.0)
        p.add_row(lp.GEQ, 1.0, [(a, 1.0)])
        sol = lp.solve_binary(p, [a, b])
        assert sol.optimal
        assert sol.stats["branch_nodes"] == 0
        assert sol.objective == pytest.approx(1.0)

    def test_incumbent_never_below_root_bound(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            n = 10
            vals = rng.uniform(1, 9, n)
            wts = rng.uniform(1, 6, n)
            W = float(wts.sum() * 0.5)
            p = lp.LpProblem()
            for j in range(n):
                p.add_var(-float(vals[j]), 0.0, 1.0)
            p.add_row(lp.LEQ, W, [(j, float(wts[j])) for j in range(n)])
            sol = lp.solve_binary(p, range(n))
            assert sol.objective >= sol.stats["root_bound"] - 1e-9

    def test_integer_infeasible(self):
        # x + y == 1 with both fixed by bounds to 0
        p = lp.LpProblem()
        a = p.add_var(1.0, 0.0, 0.0)
        b = p.add_var(1.0, 0.0, 0.0)
        p.add_row(lp.EQ, 1.0, [(a, 1.0), (b, 1.0)])
        sol = lp.solve_binary(p, [a, b])
        assert sol.status == lp.INFEASIBLE

    def test_warm_start_column_growth(self):
        p = lp.LpProblem()
        c0 = p.add_var(5.0)
        r1 = p.add_row(lp.EQ, 1.0, [(c0, 1.0)])
        r2 = p.add_row(lp.LEQ, 3.0, [(c0, 1.0)])
        s1 = lp.solve_lp(p)
        assert s1.optimal and s1.objective == pytest.approx(5.0)
        c1 = p.add_var(2.0)
        p.set_entry(r1, c1, 1.0)
        p.set_entry(r2, c1, 1.0)
        s2 = lp.solve_lp(p, warm=s1.basis)
        assert s2.optimal and s2.objective == pytest.approx(2.0)
