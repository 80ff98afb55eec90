"""Exact integer transportation between users and UAV capacity slots.

Cost kinds: a range indicator, a linear QoS cost that saturates at 1 out
of range, and the leaky QoS variant used inside clustering (keeps a small
distance gradient beyond the cell edge so out-of-range users still pull
medoids).  Imbalanced instances are balanced with a virtual supply or
demand whose pairs all cost 0.

Solving: small instances expand supplies and demands into unit slots and
match them with scipy's rectangular linear_sum_assignment, which is exact
for this class (the transportation polytope has integral vertices, and
unit-slot matching realizes them).  Virtual mass is not materialized:
leaving a slot unmatched is the same as pairing it with a zero-cost
virtual node.  Above SLOT_LIMIT the expansion is skipped and the problem
is solved directly by successive shortest paths with node potentials
(jit-compiled), whose practical growth here is near quadratic where the
expanded assignment drifts cubic.  A third formulation, the S x D
transportation LP under HiGHS simplex, is kept as method="simplex" for
cross-checking.  All paths are exact and deterministic with no RNG
involved; the oracle suites check them against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog

from .geometry import pairwise_distances

# slope of the leaky cost beyond the cell edge
LEAK_SLOPE = 0.01

# unit-slot count above which solve() leaves the assignment expansion for
# the successive-shortest-path solver
SLOT_LIMIT = 512



class CostKind(Enum):
    INDICATOR = "indicator"
    QOS = "qos"
    LEAKY_QOS = "leaky_qos"


def cost_matrix(users, uavs, kind: CostKind, cell_range: float) -> np.ndarray:
    """Per-pair cost for real users (rows) against real UAVs (columns)."""
    d = pairwise_distances(users, uavs)
    far = d > cell_range
    if kind is CostKind.INDICATOR:
        return far.astype(float)
    if kind is CostKind.QOS:
        return np.where(far, 1.0, d)
    if kind is CostKind.LEAKY_QOS:
        return np.where(far, cell_range + LEAK_SLOPE * d, d)
    raise ValueError(f"unknown cost kind {kind!r}")


@dataclass
class TransportProblem:
    supplies: np.ndarray  # int vector, length S
    demands: np.ndarray   # int vector, length D
    cost: np.ndarray      # S x D, nonnegative
    virtual_supply_index: int | None = None
    virtual_demand_index: int | None = None

    def check(self) -> None:
        if self.supplies.sum() != self.demands.sum():
            raise ValueError("unbalanced problem")
        if (self.supplies < 0).any() or (self.demands < 0).any():
            raise ValueError("negative mass")
        if self.cost.shape != (len(self.supplies), len(self.demands)):
            raise ValueError("cost shape mismatch")
        if (self.cost < 0).any():
            raise ValueError("negative cost")
        vs, vd = self.virtual_supply_index, self.virtual_demand_index
        if vs is not None and self.cost[vs].any():
            raise ValueError("virtual supply row must cost 0")
        if vd is not None and self.cost[:, vd].any():
            raise ValueError("virtual demand column must cost 0")


@dataclass
class TransportPlan:
    flow: np.ndarray      # S x D integer flows
    total_cost: float


def build_problem(users, uavs, capacity: int, kind: CostKind,
                  cell_range: float) -> TransportProblem:
    """Unit supplies per user, `capacity` demand per UAV, virtual balancing.

    A virtual user row is appended when UAV capacity exceeds M; a virtual
    UAV column when users exceed N*capacity.  Exactly balanced instances
    get neither.
    """
    users = np.atleast_2d(np.asarray(users, dtype=float))
    uavs = np.atleast_2d(np.asarray(uavs, dtype=float))
    m, n = len(users), len(uavs)
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    total_demand = n * capacity
    base = cost_matrix(users, uavs, kind, cell_range)

    supplies = [1] * m
    demands = [capacity] * n
    vs = vd = None
    if total_demand > m:
        supplies.append(total_demand - m)
        vs = m
        base = np.vstack([base, np.zeros((1, n))])
    elif m > total_demand:
        demands.append(m - total_demand)
        vd = n
        base = np.hstack([base, np.zeros((len(supplies), 1))])
    problem = TransportProblem(
        supplies=np.asarray(supplies, dtype=np.int64),
        demands=np.asarray(demands, dtype=np.int64),
        cost=base,
        virtual_supply_index=vs,
        virtual_demand_index=vd,
    )
    problem.check()
    return problem


def solve(problem: TransportProblem, method: str = "auto") -> TransportPlan:
    """Exact minimum-cost plan saturating all supplies and demands.

    method "auto" picks "slots" (unit-slot assignment) up to SLOT_LIMIT
    expanded units and "ssp" (successive shortest paths) beyond; "simplex"
    is the independent LP formulation, exact but slow on large instances,
    intended for cross-checking.
    """
    if method == "slots":
        return _solve_slots(problem)
    if method == "ssp":
        return _solve_ssp(problem)
    if method == "simplex":
        return _solve_simplex(problem)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    problem.check()
    if max(problem.supplies.sum(), problem.demands.sum()) > SLOT_LIMIT:
        return _solve_ssp(problem)
    return _solve_slots(problem)


def _make_ssp_kernel():
    from numba import njit

    @njit(cache=True)
    def kernel(cost, supplies, demands):  # pragma: no cover - jitted
        s_n, d_n = cost.shape
        u = np.zeros(s_n)
        v = np.zeros(d_n)
        ra = supplies.copy()
        rb = demands.copy()
        x = np.zeros((s_n, d_n), dtype=np.int64)
        d_col = np.empty(d_n)
        d_row = np.empty(s_n)
        prev_col = np.empty(d_n, dtype=np.int64)
        prev_row = np.empty(s_n, dtype=np.int64)
        done_col = np.empty(d_n, dtype=np.bool_)
        row_seen = np.empty(s_n, dtype=np.bool_)
        remaining = 0
        for i in range(s_n):
            remaining += ra[i]
        src = 0
        while remaining > 0:
            while ra[src] == 0:
                src = src + 1 if src + 1 < s_n else 0
            # Dijkstra over the residual bipartite graph in reduced costs;
            # rows reached by a zero-cost backward arc sit at the current
            # minimum already, so they are expanded on the spot
            for j in range(d_n):
                d_col[j] = cost[src, j] - u[src] - v[j]
                prev_col[j] = src
                done_col[j] = False
            for i in range(s_n):
                d_row[i] = np.inf
                row_seen[i] = False
            d_row[src] = 0.0
            row_seen[src] = True
            sink = -1
            dist = np.inf
            while True:
                best = -1
                best_d = np.inf
                for j in range(d_n):
                    if not done_col[j] and d_col[j] < best_d:
                        best_d = d_col[j]
                        best = j
                if best < 0:
                    break
                done_col[best] = True
                if rb[best] > 0:
                    sink = best
                    dist = best_d
                    break
                for i in range(s_n):
                    if x[i, best] > 0 and not row_seen[i]:
                        row_seen[i] = True
                        d_row[i] = best_d
                        prev_row[i] = best
                        base = best_d - u[i]
                        for j in range(d_n):
                            if not done_col[j]:
                                nd = base + cost[i, j] - v[j]
                                if nd < d_col[j]:
                                    d_col[j] = nd
                                    prev_col[j] = i
                if sink >= 0:
                    break
            if sink < 0:
                return x, -1  # no augmenting path: unbalanced input
            for i in range(s_n):
                u[i] -= min(d_row[i], dist)
            for j in range(d_n):
                v[j] += min(d_col[j], dist)
            # bottleneck along the parent chain, then push
            flow = ra[src] if ra[src] < rb[sink] else rb[sink]
            j = sink
            i = prev_col[j]
            while i != src:
                back = prev_row[i]
                if x[i, back] < flow:
                    flow = x[i, back]
                j = back
                i = prev_col[j]
            j = sink
            i = prev_col[j]
            x[i, j] += flow
            while i != src:
                back = prev_row[i]
                x[i, back] -= flow
                j = back
                i = prev_col[j]
                x[i, j] += flow
            ra[src] -= flow
            rb[sink] -= flow
            remaining -= flow
        return x, 0

    return kernel


_SSP_KERNEL = None


def _solve_ssp(problem: TransportProblem) -> TransportPlan:
    """Successive shortest paths with potentials on the S x D graph."""
    global _SSP_KERNEL
    problem.check()
    if _SSP_KERNEL is None:
        _SSP_KERNEL = _make_ssp_kernel()
    flow, status = _SSP_KERNEL(np.ascontiguousarray(problem.cost, dtype=np.float64),
                               problem.supplies.astype(np.int64),
                               problem.demands.astype(np.int64))
    if status != 0:
        raise AssertionError("no augmenting path in balanced transportation")
    if (flow.sum(axis=1) != problem.supplies).any():
        raise AssertionError("row-sum violation in transport plan")
    if (flow.sum(axis=0) != problem.demands).any():
        raise AssertionError("column-sum violation in transport plan")
    return TransportPlan(flow=flow, total_cost=float((flow * problem.cost).sum()))


def _solve_simplex(problem: TransportProblem) -> TransportPlan:
    """Transportation LP via HiGHS dual simplex; basic optima are integral."""
    problem.check()
    s, d = len(problem.supplies), len(problem.demands)
    a_eq = sparse.vstack([
        sparse.kron(sparse.eye(s, format="csr"), np.ones((1, d))),
        sparse.kron(np.ones((1, s)), sparse.eye(d, format="csr")),
    ], format="csr")
    b_eq = np.concatenate([problem.supplies, problem.demands]).astype(float)
    res = linprog(problem.cost.ravel(), A_eq=a_eq, b_eq=b_eq,
                  bounds=(0, None), method="highs-ds")
    if not res.success:
        raise RuntimeError(f"transportation LP failed: {res.message}")
    flow = np.rint(res.x).astype(np.int64).reshape(s, d)
    # the vertex must be the integral one; anything else means the solver
    # drifted off the transportation polytope
    if (not np.allclose(res.x.reshape(s, d), flow, atol=1e-6)
            or (flow.sum(axis=1) != problem.supplies).any()
            or (flow.sum(axis=0) != problem.demands).any()):
        raise AssertionError("non-integral LP solution for transportation")
    return TransportPlan(flow=flow, total_cost=float((flow * problem.cost).sum()))


def _solve_slots(problem: TransportProblem) -> TransportPlan:
    problem.check()
    supplies = problem.supplies.copy()
    demands = problem.demands.copy()
    vs, vd = problem.virtual_supply_index, problem.virtual_demand_index

    # Virtual-virtual flow is free, so cancel overlapping virtual mass first;
    # afterwards at most one side still carries virtual slack.
    vv_flow = 0
    if vs is not None and vd is not None:
        vv_flow = int(min(supplies[vs], demands[vd]))
        supplies[vs] -= vv_flow
        demands[vd] -= vv_flow

    # Expand remaining real mass into unit slots; virtual slack stays
    # unmaterialized (an unmatched slot is a zero-cost virtual pairing).
    row_mask = np.ones(len(supplies), dtype=bool)
    col_mask = np.ones(len(demands), dtype=bool)
    if vs is not None:
        row_mask[vs] = False
    if vd is not None:
        col_mask[vd] = False
    row_ids = np.repeat(np.where(row_mask)[0], supplies[row_mask])
    col_ids = np.repeat(np.where(col_mask)[0], demands[col_mask])

    flow = np.zeros((len(supplies), len(demands)), dtype=np.int64)
    if len(row_ids) and len(col_ids):
        expanded = problem.cost[np.ix_(row_ids, col_ids)]
        ri, ci = linear_sum_assignment(expanded)
        np.add.at(flow, (row_ids[ri], col_ids[ci]), 1)

    # Reconstruct virtual flows from the conservation residuals.
    if vs is not None:
        flow[vs, :] = demands - flow.sum(axis=0)
    if vd is not None:
        flow[:, vd] = supplies - flow.sum(axis=1)
    if vs is not None and vd is not None:
        flow[vs, vd] += vv_flow

    if (flow.sum(axis=1) != problem.supplies).any():
        raise AssertionError("row-sum violation in transport plan")
    if (flow.sum(axis=0) != problem.demands).any():
        raise AssertionError("column-sum violation in transport plan")
    total = float((flow * problem.cost).sum())
    return TransportPlan(flow=flow, total_cost=total)


def coverage_fraction(users, uavs, capacity: int, cell_range: float) -> float:
    """Fraction of users inside some UAV cell with capacity respected.

    With enough capacity this is 1 - (optimal indicator cost)/M; when
    slots are scarce only min(M, N*capacity) users can be covered at all,
    and the indicator optimum counts assigned-but-out-of-range users.
    """
    users = np.atleast_2d(np.asarray(users, dtype=float))
    uavs = np.atleast_2d(np.asarray(uavs, dtype=float))
    m = len(users)
    problem = build_problem(users, uavs, capacity, CostKind.INDICATOR, cell_range)
    plan = solve(problem)
    coverable = min(m, len(uavs) * capacity)
    return (coverable - plan.total_cost) / m
