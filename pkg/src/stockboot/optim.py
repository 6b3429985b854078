"""Derivative-free minimization: annealing warm-up, then pattern search.

The optimizer works on whatever coordinates it is given (the fitting code
passes scaled parameters, so one absolute step size is meaningful across
dimensions). Simulated annealing wanders out of poor starting basins; the
Hooke-Jeeves phase then polishes the best point found. Both phases respect
box bounds and a shared evaluation budget, and every accepted improvement is
logged so convergence can be inspected afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimOptions:
    max_evals: int = 100_000
    sa_evals: int = 2_000           # annealing share of the budget (0 disables it)
    tol: float = 1e-4               # pattern search stops below this step size
    sa_step: float = 0.3            # proposal spread, in coordinate units
    sa_t0: float | None = None      # absolute initial temperature, overrides sa_t0_frac
    sa_t0_frac: float = 0.2         # initial temperature as a fraction of f(x0)
    sa_t_ratio: float = 1e-4        # final over initial temperature
    hj_step: float = 0.2            # initial pattern search step
    hj_shrink: float = 0.5


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    n_evals: int
    converged: bool
    trace: list = field(default_factory=list)   # (eval count, best f) at improvements


class _BudgetExhausted(Exception):
    pass


class _Tracker:
    """Counts evaluations, remembers the incumbent, enforces the budget."""

    def __init__(self, func, max_evals):
        self.func = func
        self.max_evals = max_evals
        self.count = 0
        self.best_x = None
        self.best_f = np.inf
        self.trace = []

    def __call__(self, x):
        if self.count >= self.max_evals:
            raise _BudgetExhausted
        self.count += 1
        f = float(self.func(x))
        if f < self.best_f:
            self.best_f = f
            self.best_x = np.array(x)
            self.trace.append((self.count, f))
        return f


def _anneal(ev, x0, f0, lower, upper, rng, opt: OptimOptions):
    """Single-coordinate Metropolis walk with geometric cooling."""
    n = x0.size
    x, f = x0.copy(), f0
    t0 = opt.sa_t0 if opt.sa_t0 is not None else max(opt.sa_t0_frac * abs(f0), 1e-12)
    t_end = t0 * opt.sa_t_ratio
    steps = max(opt.sa_evals, 1)
    for i in range(opt.sa_evals):
        temp = t0 * (t_end / t0) ** (i / steps)
        j = int(rng.integers(n))
        prop = x.copy()
        prop[j] = np.clip(x[j] + opt.sa_step * rng.standard_normal(), lower[j], upper[j])
        fp = ev(prop)
        if fp <= f or rng.random() < np.exp(-(fp - f) / temp):
            x, f = prop, fp
    return x, f


def _pattern_search(ev, x0, f0, lower, upper, opt: OptimOptions):
    """Hooke-Jeeves: coordinate exploration plus pattern moves, shrinking steps."""
    n = x0.size
    h = opt.hj_step

    def explore(base, fbase):
        x, f = base.copy(), fbase
        for j in range(n):
            for sign in (1.0, -1.0):
                cand = x[j] + sign * h
                if cand < lower[j]:
                    cand = lower[j]
                elif cand > upper[j]:
                    cand = upper[j]
                if cand == x[j]:
                    continue
                trial = x.copy()
                trial[j] = cand
                ft = ev(trial)
                if ft < f:
                    x, f = trial, ft
                    break
        return x, f

    base, fbase = x0.copy(), f0
    while h >= opt.tol:
        x1, f1 = explore(base, fbase)
        if f1 < fbase:
            # pattern move: keep stepping along the improving direction
            while True:
                direction = x1 - base
                base, fbase = x1, f1
                probe = np.clip(x1 + direction, lower, upper)
                fp = ev(probe)
                x2, f2 = explore(probe, fp)
                if f2 < fbase:
                    x1, f1 = x2, f2
                else:
                    break
        else:
            h *= opt.hj_shrink
    return base, fbase, True


def minimize(func, x0, lower, upper, rng: np.random.Generator | None = None,
             options: OptimOptions | None = None) -> OptimResult:
    """Minimize ``func`` over a box from ``x0``.

    Parameters
    ----------
    func : callable
        Objective on the optimizer's coordinates; lower values are better.
    x0, lower, upper : array_like
        Start point and box bounds, all the same length.
    rng : numpy Generator, optional
        Randomness source for the annealing phase; only needed when
        ``options.sa_evals > 0``.
    options : OptimOptions, optional

    Returns
    -------
    OptimResult
        Best point found (never worse than ``x0``), its value, evaluation
        count, whether the pattern search reached its tolerance, and the
        improvement trace.
    """
    opt = options or OptimOptions()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x0 = np.clip(np.asarray(x0, dtype=float), lower, upper)
    if not (lower <= upper).all():
        raise ValueError("lower bound exceeds upper bound")
    if opt.sa_evals > 0 and rng is None:
        raise ValueError("annealing phase needs an rng")

    ev = _Tracker(func, opt.max_evals)
    converged = False
    try:
        f0 = ev(x0)
        x, f = x0, f0
        if opt.sa_evals > 0:
            _anneal(ev, x, f, lower, upper, rng, opt)
        # polish from the best point seen so far, not the last accepted one
        x, f, converged = _pattern_search(ev, ev.best_x.copy(), ev.best_f, lower, upper, opt)
    except _BudgetExhausted:
        pass
    return OptimResult(x=ev.best_x, fun=ev.best_f, n_evals=ev.count,
                       converged=converged, trace=ev.trace)
