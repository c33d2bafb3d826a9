import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from regmodbp import lp


def make_lp(c, a, b, lo, hi):
    return lp.StandardLP(np.asarray(c, float), np.asarray(a, float),
                         np.asarray(b, float), np.asarray(lo, float),
                         np.asarray(hi, float))


def test_single_variable():
    out = lp.solve_lp(make_lp([1.0], [[1.0]], [3.0], [0.0], [10.0]))
    assert out.status == lp.OPTIMAL
    assert abs(out.solution[0] - 3.0) < 1e-9
    assert abs(out.objective - 3.0) < 1e-9


def test_infeasible():
    out = lp.solve_lp(make_lp([1.0, 1.0], [[1.0, 1.0]], [-1.0],
                              [0.0, 0.0], [np.inf, np.inf]))
    assert out.status == lp.INFEASIBLE


def test_unbounded():
    out = lp.solve_lp(make_lp([-1.0, 0.0], [[1.0, -1.0]], [0.0],
                              [-np.inf, -np.inf], [np.inf, np.inf]))
    assert out.status == lp.UNBOUNDED


def test_bound_flip_only():
    # no constraints bind; optimum sits at the upper bounds
    out = lp.solve_lp(make_lp([-1.0, -2.0], np.zeros((0, 2)), np.zeros(0),
                              [0.0, 0.0], [1.0, 2.0]))
    assert out.status == lp.OPTIMAL
    assert np.allclose(out.solution, [1.0, 2.0])


def enumerate_vertices(p):
    """Independent oracle: all basic solutions of a box-bounded LP."""
    m, n = p.a_eq.shape
    best = np.inf
    for basis in itertools.combinations(range(n), m):
        bmat = p.a_eq[:, basis]
        if abs(np.linalg.det(bmat)) < 1e-10:
            continue
        others = [j for j in range(n) if j not in basis]
        for bounds in itertools.product(*[(p.lower[j], p.upper[j]) for j in others]):
            rhs = p.b_eq - p.a_eq[:, others] @ np.asarray(bounds)
            xb = np.linalg.solve(bmat, rhs)
            x = np.empty(n)
            x[list(basis)] = xb
            x[others] = bounds
            if np.all(x >= p.lower - 1e-9) and np.all(x <= p.upper + 1e-9):
                best = min(best, float(p.objective @ x))
    return best


def test_vertex_enumeration_oracle(np_rng):
    for _ in range(20):
        a = np_rng.standard_normal((4, 8))
        lo = np.zeros(8)
        hi = np_rng.uniform(0.5, 3.0, 8)
        x0 = np_rng.uniform(0, 1, 8) * hi
        b = a @ x0
        c = np_rng.standard_normal(8)
        p = make_lp(c, a, b, lo, hi)
        out = lp.solve_lp(p)
        assert out.status == lp.OPTIMAL
        oracle = enumerate_vertices(p)
        assert abs(out.objective - oracle) <= 1e-8 * (1 + abs(oracle))


def test_optimal_point_feasibility(np_rng):
    for _ in range(10):
        a = np_rng.standard_normal((5, 12))
        hi = np.full(12, 4.0)
        x0 = np_rng.uniform(0, 4, 12)
        p = make_lp(np_rng.standard_normal(12), a, a @ x0, np.zeros(12), hi)
        out = lp.solve_lp(p)
        assert out.status == lp.OPTIMAL
        assert np.abs(a @ out.solution - p.b_eq).max() <= 1e-9 * (1 + np.abs(p.b_eq).max())
        assert np.all(out.solution >= -1e-9)
        assert np.all(out.solution <= hi + 1e-9)


def test_complementary_slackness(np_rng):
    for _ in range(10):
        a = np_rng.standard_normal((4, 9))
        x0 = np_rng.uniform(0, 2, 9)
        p = make_lp(np_rng.standard_normal(9), a, a @ x0, np.zeros(9), np.full(9, 2.0))
        out = lp.solve_lp(p)
        assert out.status == lp.OPTIMAL
        # stationarity: d = c - A'y
        d = p.objective - p.a_eq.T @ out.duals
        assert np.abs(d - out.reduced_costs).max() < 1e-8
        for j in range(9):
            xj = out.solution[j]
            if xj > 1e-7 and xj < 2.0 - 1e-7:   # interior -> zero reduced cost
                assert abs(out.reduced_costs[j]) < 1e-8
            elif xj <= 1e-7:                     # at lower -> nonnegative
                assert out.reduced_costs[j] > -1e-8
            else:                                # at upper -> nonpositive
                assert out.reduced_costs[j] < 1e-8


def test_against_scipy(np_rng):
    for _ in range(10):
        a = np_rng.standard_normal((3, 7))
        x0 = np_rng.uniform(0, 1, 7)
        b = a @ x0
        c = np_rng.standard_normal(7)
        p = make_lp(c, a, b, np.zeros(7), np.full(7, 5.0))
        out = lp.solve_lp(p)
        ref = linprog(c, A_eq=a, b_eq=b, bounds=[(0, 5.0)] * 7, method="highs")
        assert out.status == lp.OPTIMAL and ref.status == 0
        assert abs(out.objective - ref.fun) <= 1e-8 * (1 + abs(ref.fun))


def test_free_variables(np_rng):
    # equality-only least-l1-style problem with a free middle variable
    a = np_rng.standard_normal((3, 6))
    x0 = np_rng.standard_normal(6)
    lo = np.array([0, 0, -np.inf, 0, 0, -np.inf])
    hi = np.full(6, np.inf)
    x0 = np.clip(x0, 0, None)
    x0[2] = -1.3
    x0[5] = 0.7
    p = make_lp(np.array([1, 1, 0, 1, 1, 0.0]), a, a @ x0, lo, hi)
    out = lp.solve_lp(p)
    assert out.status == lp.OPTIMAL
    assert np.abs(a @ out.solution - p.b_eq).max() < 1e-8


def test_determinism():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((4, 10))
    x0 = rng.uniform(0, 1, 10)
    p1 = make_lp(rng.standard_normal(10), a, a @ x0, np.zeros(10), np.full(10, 2.0))
    o1 = lp.solve_lp(p1)
    o2 = lp.solve_lp(p1)
    assert o1.iterations == o2.iterations
    assert np.array_equal(o1.solution, o2.solution)
    assert o1.objective == o2.objective


def test_degenerate_problem_terminates():
    # many redundant equalities pinning the same point
    a = np.vstack([np.eye(3), np.eye(3)])
    b = np.array([1.0, 2.0, 3.0, 1.0, 2.0, 3.0])
    p = make_lp(np.ones(3), a, b, np.zeros(3), np.full(3, 10.0))
    out = lp.solve_lp(p)
    assert out.status == lp.OPTIMAL
    assert np.allclose(out.solution, [1, 2, 3])


def test_fixed_variables():
    p = make_lp([1.0, 1.0], [[1.0, 1.0]], [2.0], [0.5, 0.0], [0.5, np.inf])
    out = lp.solve_lp(p)
    assert out.status == lp.OPTIMAL
    assert np.allclose(out.solution, [0.5, 1.5])


def test_format_lp_dump():
    p = make_lp([1.0, 0.0], [[2.0, -1.0]], [3.0], [0.0, -np.inf], [np.inf, 5.0])
    text = lp.format_lp(p)
    assert "minimize" in text and "subject to" in text and "bounds" in text
    assert "+2*x0" in text and "-1*x1" in text
