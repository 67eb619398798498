"""Deterministic simplex grids and local coordinate refinement."""

from itertools import combinations
from math import comb

import numpy as np


def simplex_grid_size(dim, steps):
    """Number of points of the step-``1/steps`` grid on the ``dim``-simplex."""
    return comb(steps + dim - 1, dim - 1)


def simplex_grid(dim, steps):
    """All nonnegative vectors of length ``dim`` with entries in ``{0, 1/steps, ..}`` summing to 1.

    Points come in a fixed (lexicographic stars-and-bars) order.
    """
    if dim == 1:
        return np.ones((1, 1))
    bars = np.array(list(combinations(range(steps + dim - 1), dim - 1)), dtype=np.int64)
    edges = np.hstack([np.full((len(bars), 1), -1), bars,
                       np.full((len(bars), 1), steps + dim - 1)])
    counts = np.diff(edges, axis=1) - 1
    return counts / float(steps)


def coarsest_fitting_steps(dim, steps, max_points):
    """Largest ``s <= steps`` whose grid has at most ``max_points`` points."""
    s = steps
    while s > 1 and simplex_grid_size(dim, s) > max_points:
        s -= 1
    return s


def refine_on_simplex(objective, point, step, rounds=3, max_moves=500):
    """Greedy mass-transfer refinement of ``point`` on the probability simplex.

    ``objective`` maps a batch ``(B, dim)`` to ``(B,)`` values to maximize.
    Each round tries every move of ``delta`` mass from one coordinate to
    another, takes the best strict improvement, and repeats until none is
    left; ``delta`` starts at ``step / 2`` and halves every round.
    Returns the refined point and its value.
    """
    x = np.array(point, dtype=float)
    best = float(objective(x[None, :])[0])
    dim = x.size
    if dim < 2:
        return x, best
    src, dst = np.array([(i, j) for i in range(dim) for j in range(dim) if i != j]).T
    delta = step / 2.0
    for _ in range(rounds):
        for _ in range(max_moves):
            amount = np.minimum(delta, x[src])
            ok = amount > 0
            if not ok.any():
                break
            cand = np.repeat(x[None, :], ok.sum(), axis=0)
            rows = np.arange(ok.sum())
            cand[rows, src[ok]] -= amount[ok]
            cand[rows, dst[ok]] += amount[ok]
            cand = np.clip(cand, 0.0, None)
            cand /= cand.sum(axis=1, keepdims=True)
            vals = objective(cand)
            i = int(np.argmax(vals))
            if vals[i] <= best + 1e-15:
                break
            x, best = cand[i], float(vals[i])
        delta /= 2.0
    return x, best
