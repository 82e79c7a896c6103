"""Independent brute-force references used by the test suite.

Everything here solves by direct enumeration of the definitions, with no
shared machinery with the production solver, so it can serve as an oracle.
Not exposed through the CLI.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .model import BalancedAssignment, CenterSet, Instance, Point2

MAX_ORACLE_PERSONS = 10
MAX_ORACLE_CENTERS = 3


class OracleBoundError(ValueError):
    """Instance is too large for exhaustive enumeration."""


def _compositions(total: int, bounds: tuple[int, ...]):
    """All ways to split `total` into len(bounds) parts with 0 <= part <= bound."""
    if len(bounds) == 1:
        if total <= bounds[0]:
            yield (total,)
        return
    for first in range(min(total, bounds[0]) + 1):
        for rest in _compositions(total - first, bounds[1:]):
            yield (first,) + rest


def brute_force_transport(costs, supplies, demands) -> int:
    """Exact minimum cost of a dense integral transshipment, by enumeration.

    Dynamic program over supply nodes and remaining demand vectors; suitable
    for a handful of nodes per side only.
    """
    cost_rows = [tuple(int(c) for c in row) for row in costs]
    supply = [int(s) for s in supplies]
    demand = tuple(int(d) for d in demands)
    if sum(supply) != sum(demand):
        raise ValueError("total supply must equal total demand")

    @lru_cache(maxsize=None)
    def best(i: int, remaining: tuple[int, ...]) -> int:
        if i == len(supply):
            return 0
        row = cost_rows[i]
        out = None
        for parts in _compositions(supply[i], remaining):
            rest = best(i + 1, tuple(r - p for r, p in zip(remaining, parts)))
            here = sum(p * c for p, c in zip(parts, row)) + rest
            if out is None or here < out:
                out = here
        if out is None:
            raise ValueError("infeasible remainder")
        return out

    return best(0, demand)


def brute_force_balanced(inst: Instance, centers: CenterSet) -> tuple[BalancedAssignment, float]:
    """Minimum-cost balanced assignment by exhaustive enumeration.

    Treats each person as a unit and every block as splittable; returns the
    first optimum in lexicographic enumeration order together with its exact
    unscaled cost.
    """
    centers.validate_for(inst)
    if inst.m > MAX_ORACLE_PERSONS:
        raise OracleBoundError(f"oracle handles at most {MAX_ORACLE_PERSONS} persons, got {inst.m}")
    if centers.k > MAX_ORACLE_CENTERS:
        raise OracleBoundError(f"oracle handles at most {MAX_ORACLE_CENTERS} centers, got {centers.k}")

    locs = inst.locations()
    pops = inst.populations()
    k = centers.k
    d2 = ((locs[:, None, :] - centers.positions[None, :, :]) ** 2).sum(axis=2)

    best_cost = math.inf
    best_rows: list[tuple[int, int, int]] | None = None
    rows: list[tuple[int, int, int]] = []

    def recurse(i: int, remaining: tuple[int, ...], acc: float) -> None:
        nonlocal best_cost, best_rows
        if acc >= best_cost:
            return
        if i == inst.n_blocks:
            best_cost = acc
            best_rows = list(rows)
            return
        pop = int(pops[i])
        if pop == 0:
            recurse(i + 1, remaining, acc)
            return
        for parts in _compositions(pop, remaining):
            added = sum(p * d2[i, j] for j, p in enumerate(parts) if p)
            if acc + added >= best_cost:
                continue
            for j, p in enumerate(parts):
                if p:
                    rows.append((i, j, p))
            recurse(i + 1, tuple(r - p for r, p in zip(remaining, parts)), acc + added)
            for j, p in enumerate(parts):
                if p:
                    rows.pop()

    recurse(0, tuple(int(c) for c in centers.capacities), 0.0)
    assert best_rows is not None
    asg = BalancedAssignment(
        block_indices=np.array([r[0] for r in best_rows], dtype=np.int64),
        center_indices=np.array([r[1] for r in best_rows], dtype=np.int64),
        persons=np.array([r[2] for r in best_rows], dtype=np.int64),
    )
    return asg, float(best_cost)


def naive_centroid(points, weights) -> Point2:
    """Weighted mean of points; cross-checks the centroid step."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    total = w.sum()
    if total <= 0:
        raise ValueError("total weight must be positive")
    mean = (pts * w[:, None]).sum(axis=0) / total
    return Point2(float(mean[0]), float(mean[1]))


def swap_heuristic(locations, centers, matching: list[int]) -> list[int]:
    """Pairwise-exchange local search on a unit-capacity matching.

    Repeatedly applies the first cost-reducing swap of two residents'
    centers until none exists. This is the local-exchange rule that fails
    to reach the optimum on the hexagon counter-example.
    """
    locs = np.asarray(locations, dtype=np.float64).reshape(-1, 2)
    cpos = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    assign = list(matching)

    def d2(i: int, x: int) -> float:
        dx = locs[i, 0] - cpos[x, 0]
        dy = locs[i, 1] - cpos[x, 1]
        return dx * dx + dy * dy

    improved = True
    while improved:
        improved = False
        for i in range(len(assign)):
            for j in range(i + 1, len(assign)):
                before = d2(i, assign[i]) + d2(j, assign[j])
                after = d2(i, assign[j]) + d2(j, assign[i])
                if after < before:
                    assign[i], assign[j] = assign[j], assign[i]
                    improved = True
    return assign
