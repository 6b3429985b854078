import numpy as np
import pytest

from stockboot.optim import OptimOptions, OptimResult, minimize


def rng(seed=0):
    return np.random.default_rng(seed)


def test_quadratic_bowl_recovered():
    target = np.array([0.3, -1.2, 2.0, 0.0])
    f = lambda z: float(((z - target) ** 2).sum())
    lo, hi = np.full(4, -5.0), np.full(4, 5.0)
    res = minimize(f, np.zeros(4), lo, hi, rng(1),
                   OptimOptions(max_evals=10_000, sa_evals=500, tol=1e-5))
    assert res.fun < 1e-8
    np.testing.assert_allclose(res.x, target, atol=1e-3)
    assert res.converged


def test_rosenbrock_long_valley():
    f = lambda z: float((1 - z[0]) ** 2 + 100 * (z[1] - z[0] ** 2) ** 2)
    lo, hi = np.full(2, -5.0), np.full(2, 5.0)
    res = minimize(f, np.array([-1.2, 1.0]), lo, hi, rng(2),
                   OptimOptions(max_evals=50_000, sa_evals=2_000, tol=1e-7))
    assert res.fun < 1e-4


def test_result_never_worse_than_start():
    f = lambda z: float((z ** 2).sum())
    x0 = np.array([2.0, -3.0])
    res = minimize(f, x0, np.full(2, -4.0), np.full(2, 4.0), rng(3),
                   OptimOptions(max_evals=50, sa_evals=30))
    assert res.fun <= f(x0)


def test_bounds_respected_on_every_evaluation():
    lo = np.array([-1.0, 0.5])
    hi = np.array([2.0, 3.0])
    seen = []

    def f(z):
        seen.append(np.array(z))
        return float(((z - np.array([5.0, -5.0])) ** 2).sum())  # optimum outside box

    res = minimize(f, np.array([0.0, 1.0]), lo, hi, rng(4),
                   OptimOptions(max_evals=3_000, sa_evals=300))
    arr = np.vstack(seen)
    assert (arr >= lo - 1e-12).all() and (arr <= hi + 1e-12).all()
    # constrained optimum sits on the corner nearest the unconstrained one
    np.testing.assert_allclose(res.x, [2.0, 0.5], atol=1e-3)


def test_budget_respected_exactly():
    f = lambda z: float((z ** 2).sum())
    res = minimize(f, np.full(3, 2.0), np.full(3, -5.0), np.full(3, 5.0), rng(5),
                   OptimOptions(max_evals=137, sa_evals=1_000))
    assert res.n_evals == 137
    assert not res.converged


def test_same_seed_reproduces_everything():
    f = lambda z: float(((z - 1.3) ** 2).sum() + 0.1 * np.cos(3 * z).sum())
    lo, hi = np.full(3, -4.0), np.full(3, 4.0)
    opts = OptimOptions(max_evals=5_000, sa_evals=800)
    a = minimize(f, np.zeros(3), lo, hi, rng(42), opts)
    b = minimize(f, np.zeros(3), lo, hi, rng(42), opts)
    assert a.fun == b.fun
    np.testing.assert_array_equal(a.x, b.x)
    assert a.trace == b.trace
    assert a.n_evals == b.n_evals


def test_trace_is_monotone_improvement():
    f = lambda z: float((z ** 2).sum())
    res = minimize(f, np.full(2, 3.0), np.full(2, -5.0), np.full(2, 5.0), rng(6),
                   OptimOptions(max_evals=2_000, sa_evals=400))
    counts = [c for c, _ in res.trace]
    values = [v for _, v in res.trace]
    assert counts == sorted(counts)
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] == res.fun


def test_pure_pattern_search_is_comparison_based():
    # without annealing, scaling the objective cannot change the path
    calls_a, calls_b = [], []

    def f(z):
        calls_a.append(tuple(z))
        return float(((z - 0.7) ** 2).sum())

    def g(z):
        calls_b.append(tuple(z))
        return 1000.0 * float(((z - 0.7) ** 2).sum())

    opts = OptimOptions(max_evals=2_000, sa_evals=0, tol=1e-6)
    a = minimize(f, np.zeros(2), np.full(2, -3.0), np.full(2, 3.0), options=opts)
    b = minimize(g, np.zeros(2), np.full(2, -3.0), np.full(2, 3.0), options=opts)
    assert calls_a == calls_b
    np.testing.assert_array_equal(a.x, b.x)


def test_annealing_requires_rng():
    with pytest.raises(ValueError, match="rng"):
        minimize(lambda z: 0.0, np.zeros(1), np.array([-1.0]), np.array([1.0]),
                 options=OptimOptions(sa_evals=10))


def test_annealing_escapes_poor_basin():
    # double well with the start trapped in the shallow one
    def f(z):
        v = z[0]
        return float(min((v + 2.0) ** 2 + 0.5, (v - 2.0) ** 2))

    opts = OptimOptions(max_evals=4_000, sa_evals=1_500, sa_step=0.8, sa_t0=2.0, tol=1e-6)
    res = minimize(f, np.array([-2.0]), np.array([-6.0]), np.array([6.0]), rng(9), opts)
    assert res.fun < 1e-6
    assert res.x[0] == pytest.approx(2.0, abs=1e-3)


def test_start_outside_bounds_is_clipped():
    f = lambda z: float((z ** 2).sum())
    res = minimize(f, np.array([10.0]), np.array([1.0]), np.array([5.0]), rng(7),
                   OptimOptions(max_evals=500, sa_evals=50))
    assert res.x[0] == pytest.approx(1.0, abs=1e-6)


def test_result_type_fields():
    res = minimize(lambda z: float(z[0] ** 2), np.array([1.0]),
                   np.array([-2.0]), np.array([2.0]), rng(0),
                   OptimOptions(max_evals=200, sa_evals=20))
    assert isinstance(res, OptimResult)
    assert res.n_evals <= 200
    assert res.fun == pytest.approx(0.0, abs=1e-6)
