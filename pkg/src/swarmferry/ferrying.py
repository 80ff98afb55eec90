"""Rotation planning for data ferries.

Builds the one-step cycle weight matrix and the binary-jumping circulant,
evaluates the quadratic-assignment objective tr(D P W P^T), solves it
exactly for small instances (Held-Karp for the cycle case) and by a
cycle-crossover genetic algorithm otherwise, and drives the per-round
offset schedule that tells UAV i which cluster to track.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


class WeightKind(Enum):
    CYCLE = "cycle"
    BINARY_JUMP = "binary_jump"


@dataclass(frozen=True)
class WeightMatrix:
    w: np.ndarray
    kind: WeightKind

    @classmethod
    def cycle(cls, n: int) -> "WeightMatrix":
        """w[i][j] = 1 iff j = (i+1) mod n."""
        w = np.zeros((n, n))
        w[np.arange(n), (np.arange(n) + 1) % n] = 1.0
        return cls(w=w, kind=WeightKind.CYCLE)

    @classmethod
    def binary_jump(cls, n: int) -> "WeightMatrix":
        """w[i][j] = 1 iff j - i is a power of two mod n (deduplicated)."""
        w = np.zeros((n, n))
        for off in binary_offsets(n):
            w[np.arange(n), (np.arange(n) + off) % n] = 1.0
        return cls(w=w, kind=WeightKind.BINARY_JUMP)


def binary_offsets(n: int) -> list[int]:
    """Distinct offsets {2^k mod n, k = 0..ceil(log2 n)-1}, ascending."""
    if n < 2:
        raise ValueError("need at least 2 clusters")
    levels = math.ceil(math.log2(n))
    return sorted({(1 << k) % n for k in range(levels)})


def jump_sequence(kind: WeightKind, n: int) -> tuple[int, ...]:
    """Per-round offset increments: n-1 single steps, or halving jumps."""
    if n < 2:
        raise ValueError("need at least 2 clusters")
    if kind is WeightKind.CYCLE:
        return (1,) * (n - 1)
    levels = math.ceil(math.log2(n))
    return tuple((1 << k) % n for k in range(levels - 1, -1, -1))


def check_permutation(pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=np.int64)
    n = len(pi)
    if not np.array_equal(np.sort(pi), np.arange(n)):
        raise ValueError("not a permutation")
    return pi


def qap_cost(distances, weights: WeightMatrix, pi) -> float:
    """Sum over i,j of D[pi(i)][pi(j)] * w[i][j]."""
    d = np.asarray(distances, dtype=float)
    pi = check_permutation(pi)
    if d.shape != weights.w.shape or len(pi) != d.shape[0]:
        raise ValueError("dimension mismatch")
    return float((d[np.ix_(pi, pi)] * weights.w).sum())


def _population_costs(distances, weights: WeightMatrix, pop: np.ndarray) -> np.ndarray:
    """QAP cost of every permutation in pop, shape (k,)."""
    wi, wj = np.nonzero(weights.w)
    return distances[pop[:, wi], pop[:, wj]].sum(axis=1)


def _held_karp(d: np.ndarray) -> np.ndarray:
    """Exact shortest cycle through all nodes, anchored at node 0."""
    n = len(d)
    full = 1 << (n - 1)  # subsets of nodes 1..n-1
    cost = np.full((full, n - 1), np.inf)
    parent = np.full((full, n - 1), -1, dtype=np.int64)
    for j in range(n - 1):
        cost[1 << j, j] = d[0, j + 1]
    for mask in range(1, full):
        for j in range(n - 1):
            c = cost[mask, j]
            if not np.isfinite(c):
                continue
            rest = ~mask & (full - 1)
            k = rest
            while k:
                b = k & -k
                nxt = b.bit_length() - 1
                nm = mask | b
                nc = c + d[j + 1, nxt + 1]
                if nc < cost[nm, nxt]:
                    cost[nm, nxt] = nc
                    parent[nm, nxt] = j
                k ^= b
    closing = cost[full - 1] + d[1:, 0]
    j = int(np.argmin(closing))
    order = []
    mask = full - 1
    while j >= 0:
        order.append(j + 1)
        pj = parent[mask, j]
        mask ^= 1 << j
        j = pj
    order.append(0)
    return np.array(order[::-1], dtype=np.int64)


def _tour_length(d: np.ndarray, tour: np.ndarray) -> float:
    return float(d[tour, np.roll(tour, -1)].sum())


def _two_opt(d: np.ndarray, tour: np.ndarray) -> np.ndarray:
    """First-improvement 2-opt, repeated to a local optimum."""
    n = len(tour)
    tour = tour.copy()
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            a, b = tour[i], tour[(i + 1) % n]
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue
                c, e = tour[j], tour[(j + 1) % n]
                delta = d[a, c] + d[b, e] - d[a, b] - d[c, e]
                if delta < -1e-12:
                    tour[i + 1:j + 1] = tour[i + 1:j + 1][::-1]
                    improved = True
                    break
            if improved:
                break
    return tour


def solve_tsp(distances) -> np.ndarray:
    """Minimum-length cycle visiting all nodes; exact for n <= 12.

    Larger instances use nearest-neighbor construction refined by 2-opt.
    The returned permutation starts at node 0.
    """
    d = np.asarray(distances, dtype=float)
    n = len(d)
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if n == 2:
        return np.array([0, 1], dtype=np.int64)
    if n <= 12:
        return _held_karp(d)
    visited = np.zeros(n, dtype=bool)
    tour = [0]
    visited[0] = True
    for _ in range(n - 1):
        last = tour[-1]
        dist = d[last].copy()
        dist[visited] = np.inf
        tour.append(int(np.argmin(dist)))
        visited[tour[-1]] = True
    return _two_opt(d, np.array(tour, dtype=np.int64))


def cycle_crossover(parent_a, parent_b) -> tuple[np.ndarray, np.ndarray]:
    """Standard CX: positions alternate between parental cycles.

    Deterministic; equal parents yield equal children, and every child
    position carries a gene from one of the parents at that position.
    """
    a = check_permutation(parent_a)
    b = check_permutation(parent_b)
    n = len(a)
    if len(b) != n:
        raise ValueError("parent length mismatch")
    pos_in_a = np.empty(n, dtype=np.int64)
    pos_in_a[a] = np.arange(n)
    child_a = np.empty(n, dtype=np.int64)
    child_b = np.empty(n, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    cycle = 0
    for start in range(n):
        if seen[start]:
            continue
        idx = start
        while not seen[idx]:
            seen[idx] = True
            if cycle % 2 == 0:
                child_a[idx] = a[idx]
                child_b[idx] = b[idx]
            else:
                child_a[idx] = b[idx]
                child_b[idx] = a[idx]
            idx = pos_in_a[b[idx]]
        cycle += 1
    return child_a, child_b


def solve_qap_ga(distances, weights: WeightMatrix, n_generations: int,
                 population: int, p_crossover: float, p_mutation: float,
                 rng: np.random.Generator, return_history: bool = False,
                 warm_start=None):
    """Genetic search over permutations for the QAP objective.

    Truncation selection keeps the best half each generation; children come
    from cycle crossover on consecutive survivor pairs (applied with
    probability p_crossover, parents copied otherwise), then each child is
    mutated with probability p_mutation by one uniform index-pair swap.
    Returns the best permutation ever evaluated.

    warm_start, if given, is placed in the initial population, so the result
    never costs more than the incumbent and ties resolve in its favor.
    """
    d = np.asarray(distances, dtype=float)
    n = len(d)
    if population < 2 or population % 2:
        raise ValueError("population must be even and >= 2")
    pop = np.array([rng.permutation(n) for _ in range(population)], dtype=np.int64)
    if warm_start is not None:
        pop[0] = check_permutation(warm_start)
    best_perm = None
    best_cost = np.inf
    history = []

    def take_best(costs):
        nonlocal best_perm, best_cost
        gen_best = int(np.argmin(costs))
        if costs[gen_best] < best_cost:
            best_cost = float(costs[gen_best])
            best_perm = pop[gen_best].copy()
        history.append(best_cost)

    costs = _population_costs(d, weights, pop)
    take_best(costs)
    for _ in range(n_generations):
        order = np.argsort(costs, kind="stable")
        survivors = pop[order[: population // 2]]
        children = []
        m = len(survivors)
        for p in range(0, m - 1, 2):
            pa, pb = survivors[p], survivors[p + 1]
            if rng.random() < p_crossover:
                ca, cb = cycle_crossover(pa, pb)
            else:
                ca, cb = pa.copy(), pb.copy()
            children.extend([ca, cb])
        if m % 2:
            children.append(survivors[-1].copy())
        for child in children:
            if rng.random() < p_mutation:
                i = int(rng.integers(n))
                j = int(rng.integers(n - 1))
                if j >= i:
                    j += 1
                child[i], child[j] = child[j], child[i]
        pop = np.vstack([survivors, np.array(children, dtype=np.int64)])
        costs = _population_costs(d, weights, pop)
        take_best(costs)
    if return_history:
        return best_perm, history
    return best_perm


@dataclass(frozen=True)
class RotationSchedule:
    """Which cluster each UAV tracks, and how that shifts per rotation."""

    pi: np.ndarray
    jumps: tuple[int, ...]
    alpha: int = 0
    round_position: int = 0

    @property
    def n(self) -> int:
        return len(self.pi)

    def target_cluster(self, uav: int) -> int:
        return int(self.pi[(uav + self.alpha) % self.n])

    def targets(self) -> np.ndarray:
        idx = (np.arange(self.n) + self.alpha) % self.n
        return self.pi[idx]

    @property
    def round_complete(self) -> bool:
        return self.round_position == 0

    def advance(self) -> "RotationSchedule":
        """Apply the next jump offset; wraps round_position at round end."""
        step = self.jumps[self.round_position]
        return replace(
            self,
            alpha=(self.alpha + step) % self.n,
            round_position=(self.round_position + 1) % len(self.jumps),
        )


def make_schedule(pi, kind: WeightKind, alpha: int = 0) -> RotationSchedule:
    pi = check_permutation(pi)
    return RotationSchedule(pi=pi, jumps=jump_sequence(kind, len(pi)),
                            alpha=int(alpha) % len(pi))


def total_rotation_distance(distances_permuted, weights: WeightMatrix) -> float:
    """Distance all UAVs travel in one full round, static-cluster case.

    Expects D already permuted into schedule order.  One-step cycles make
    n-1 jumps per round; binary jumping makes each power-of-two jump once.
    """
    d = np.asarray(distances_permuted, dtype=float)
    inner = float((d * weights.w).sum())
    if weights.kind is WeightKind.CYCLE:
        return (len(d) - 1) * inner
    return inner
