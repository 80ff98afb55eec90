"""Capacity-constrained medoid clustering by alternating minimization.

One round alternates an exact transport assignment of users to medoids
(capacity per medoid, leaky QoS cost) with a medoid update that re-centers
each cluster on the member-sum-minimizing user position.  The objective is
nonincreasing along the round sequence; iteration stops early only when the
cost is exactly unchanged.

`CapacitatedMedoids` wraps the same primitives behind a scikit-learn
estimator interface for standalone clustering use; the simulator calls the
functional layer directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils import check_array, check_random_state

from . import transport
from .geometry import pairwise_distances
from .transport import CostKind


@dataclass
class ClusterState:
    medoids: np.ndarray               # (N, 2) rows are user positions
    medoid_indices: np.ndarray        # (N,) indices into the user array
    assignments: list[np.ndarray]     # per-cluster arrays of user indices
    cost_trace: list[float] = field(default_factory=list)

    def labels_for(self, n_users: int) -> np.ndarray:
        """Per-user cluster index, -1 for users left unassigned."""
        labels = np.full(n_users, -1, dtype=np.int64)
        for i, members in enumerate(self.assignments):
            labels[members] = i
        return labels


def assign(users, medoids, capacity: int, cell_range: float,
           kind: CostKind = CostKind.LEAKY_QOS):
    """Capacity-respecting assignment of users to medoids.

    Returns (assignments, cost): per-medoid member index arrays and the
    optimal transport objective.  Users routed to the virtual demand (only
    possible when N*capacity < M) appear in no cluster.
    """
    users = np.atleast_2d(np.asarray(users, dtype=float))
    problem = transport.build_problem(users, medoids, capacity, kind, cell_range)
    plan = transport.solve(problem)
    n = len(np.atleast_2d(medoids))
    real_flow = plan.flow[: len(users), :n]
    assignments = [np.where(real_flow[:, j] == 1)[0] for j in range(n)]
    return assignments, plan.total_cost


def update_medoids(users, assignments, previous_indices, cell_range: float,
                   kind: CostKind = CostKind.LEAKY_QOS) -> np.ndarray:
    """Per-cluster medoid re-centering over all user positions as candidates.

    The new medoid of cluster i minimizes the summed cost to its members;
    candidates are every user position, not only members.  Empty clusters
    keep their previous medoid.  Ties take the lowest candidate index.
    """
    users = np.atleast_2d(np.asarray(users, dtype=float))
    cand_cost = transport.cost_matrix(users, users, kind, cell_range)
    indices = np.asarray(previous_indices, dtype=np.int64).copy()
    for i, members in enumerate(assignments):
        if len(members) == 0:
            continue
        scores = cand_cost[:, members].sum(axis=1)
        indices[i] = int(np.argmin(scores))
    return indices


def run_am(users, initial_indices, capacity: int, cell_range: float,
           n_iterations: int, kind: CostKind = CostKind.LEAKY_QOS) -> ClusterState:
    """Alternate assignment and medoid update for n_iterations rounds."""
    users = np.atleast_2d(np.asarray(users, dtype=float))
    indices = np.asarray(initial_indices, dtype=np.int64)
    trace: list[float] = []
    assignments: list[np.ndarray] = []
    for _ in range(n_iterations):
        assignments, cost = assign(users, users[indices], capacity, cell_range, kind)
        trace.append(cost)
        indices = update_medoids(users, assignments, indices, cell_range, kind)
        if len(trace) >= 2 and trace[-1] == trace[-2]:
            break
    return ClusterState(
        medoids=users[indices].copy(),
        medoid_indices=indices,
        assignments=assignments,
        cost_trace=trace,
    )


def project_to_users(medoids, users) -> np.ndarray:
    """Nearest-user index for each medoid (warm start across moving users)."""
    d = pairwise_distances(medoids, users)
    return d.argmin(axis=1).astype(np.int64)


def initial_indices(n_users: int, n_clusters: int, rng: np.random.Generator) -> np.ndarray:
    """Seed medoids: n_clusters distinct user indices drawn uniformly."""
    if n_clusters > n_users:
        raise ValueError("more clusters than users")
    return rng.choice(n_users, size=n_clusters, replace=False).astype(np.int64)


class CapacitatedMedoids(BaseEstimator, ClusterMixin):
    """Medoid clustering with a hard per-cluster size cap.

    Parameters
    ----------
    n_clusters : number of medoids.
    capacity : max members per cluster; None means ceil(n_samples / n_clusters).
    n_iterations : alternating-minimization rounds.
    cell_range : range beyond which the leaky cost saturates.
    random_state : seed for the initial medoid draw.

    Attributes after fit: ``cluster_centers_``, ``medoid_indices_``,
    ``labels_`` (-1 = unassigned), ``inertia_``, ``cost_trace_``.
    """

    def __init__(self, n_clusters=8, capacity=None, n_iterations=4,
                 cell_range=1000.0, random_state=None):
        self.n_clusters = n_clusters
        self.capacity = capacity
        self.n_iterations = n_iterations
        self.cell_range = cell_range
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("expected 2-D positions with shape (n_samples, 2)")
        if self.n_clusters < 1 or self.n_clusters > len(X):
            raise ValueError("n_clusters must be in [1, n_samples]")
        capacity = self.capacity
        if capacity is None:
            capacity = -(-len(X) // self.n_clusters)
        if capacity < 1:
            raise ValueError("capacity must be positive")
        rs = check_random_state(self.random_state)
        rng = np.random.default_rng(rs.randint(np.iinfo(np.int32).max))
        init = initial_indices(len(X), self.n_clusters, rng)
        state = run_am(X, init, capacity, self.cell_range, self.n_iterations)
        self.cluster_centers_ = state.medoids
        self.medoid_indices_ = state.medoid_indices
        labels = np.full(len(X), -1, dtype=np.int64)
        for i, members in enumerate(state.assignments):
            labels[members] = i
        self.labels_ = labels
        self.cost_trace_ = list(state.cost_trace)
        self.inertia_ = state.cost_trace[-1]
        self._capacity_ = capacity
        return self

    def predict(self, X):
        if not hasattr(self, "cluster_centers_"):
            raise AttributeError("fit before predict")
        X = check_array(X, dtype=float)
        assignments, _ = assign(X, self.cluster_centers_, self._capacity_,
                                self.cell_range)
        labels = np.full(len(X), -1, dtype=np.int64)
        for i, members in enumerate(assignments):
            labels[members] = i
        return labels

    def transform(self, X):
        """Distances from samples to each fitted medoid."""
        if not hasattr(self, "cluster_centers_"):
            raise AttributeError("fit before transform")
        X = check_array(X, dtype=float)
        return pairwise_distances(X, self.cluster_centers_)
