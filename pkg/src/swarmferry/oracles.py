"""Brute-force reference implementations for self-tests.

These deliberately share no code with the production solvers: plain
enumeration over integer flow matrices, permutations, and tours.  They are
exponential and only meant for small instances.
"""

from __future__ import annotations

import itertools

import numpy as np


def _compositions(total: int, parts: int, limits):
    """All ways to split `total` into `parts` nonneg integers, part i <= limits[i]."""
    if parts == 1:
        if total <= limits[0]:
            yield (total,)
        return
    for first in range(min(total, limits[0]) + 1):
        for rest in _compositions(total - first, parts - 1, limits[1:]):
            yield (first,) + rest


def min_cost_flow_bruteforce(supplies, demands, cost) -> float:
    """Exhaustive minimum over all feasible integer flow matrices."""
    supplies = [int(s) for s in supplies]
    demands = [int(d) for d in demands]
    cost = np.asarray(cost, dtype=float)
    if sum(supplies) != sum(demands):
        raise ValueError("unbalanced")
    best = np.inf

    def recurse(row: int, remaining: tuple, acc: float):
        nonlocal best
        if acc >= best:
            return
        if row == len(supplies):
            if all(r == 0 for r in remaining):
                best = acc
            return
        for split in _compositions(supplies[row], len(demands), remaining):
            recurse(row + 1,
                    tuple(r - s for r, s in zip(remaining, split)),
                    acc + sum(f * cost[row, j] for j, f in enumerate(split)))

    recurse(0, tuple(demands), 0.0)
    return float(best)


def tsp_bruteforce(distances) -> tuple[float, tuple[int, ...]]:
    """Shortest cycle by enumerating all (n-1)! tours anchored at node 0."""
    d = np.asarray(distances, dtype=float)
    n = len(d)
    best_cost = np.inf
    best_tour = None
    for rest in itertools.permutations(range(1, n)):
        tour = (0,) + rest
        cost = sum(d[tour[i], tour[(i + 1) % n]] for i in range(n))
        if cost < best_cost:
            best_cost = cost
            best_tour = tour
    return float(best_cost), best_tour


def qap_bruteforce(distances, w) -> tuple[float, tuple[int, ...]]:
    """Minimum of sum_ij D[pi(i)][pi(j)] * w[i][j] over all n! permutations."""
    d = np.asarray(distances, dtype=float)
    w = np.asarray(w, dtype=float)
    n = len(d)
    wi, wj = np.nonzero(w)
    weights = w[wi, wj]
    best_cost = np.inf
    best_pi = None
    for pi in itertools.permutations(range(n)):
        p = np.array(pi)
        cost = float((d[p[wi], p[wj]] * weights).sum())
        if cost < best_cost:
            best_cost = cost
            best_pi = pi
    return best_cost, best_pi


def kmedoids_step_reference(points, medoid_indices):
    """One textbook capacity-free k-medoids step: nearest-medoid assignment,
    then per-cluster 1-median over ALL points as candidates."""
    points = np.asarray(points, dtype=float)
    medoids = points[list(medoid_indices)]
    diff = points[:, None, :] - medoids[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    labels = dist.argmin(axis=1)
    new_indices = []
    all_d = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    for k in range(len(medoids)):
        members = np.where(labels == k)[0]
        if len(members) == 0:
            new_indices.append(int(medoid_indices[k]))
            continue
        sums = all_d[:, members].sum(axis=1)
        new_indices.append(int(sums.argmin()))
    return labels, np.array(new_indices, dtype=np.int64)


def check_cx_properties(a, b, child_a, child_b) -> None:
    """Assert the defining cycle-crossover properties of one application."""
    n = len(a)
    for child in (child_a, child_b):
        if sorted(child) != list(range(n)):
            raise AssertionError("child is not a permutation")
    for i in range(n):
        if child_a[i] not in (a[i], b[i]) or child_b[i] not in (a[i], b[i]):
            raise AssertionError("child gene not drawn positionwise from parents")
        # the two children split the parents' genes at every position
        if {child_a[i], child_b[i]} != {a[i], b[i]}:
            raise AssertionError("children do not partition parental genes")
