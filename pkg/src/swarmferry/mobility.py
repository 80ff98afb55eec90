"""Ground-user position sources.

Native generators: random waypoint (pause, then straight leg to a uniform
waypoint at a uniform speed) and Gaussian blobs around cluster centers on
a circle, optionally rotating.  External scenarios come in as waypoint
trace files, one line per node of "t x y" triples; positions are linear
interpolations between waypoints, held flat outside the trace span.
"""

from __future__ import annotations

import numpy as np

from .geometry import clamp_to_area


class MobilityModel:
    """Interface: immutable after construction, positions are pure in t."""

    n_nodes: int

    def positions_at(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def positions_grid(self, times) -> np.ndarray:
        """Positions sampled at each time, shape (len(times), n_nodes, 2)."""
        times = np.asarray(times, dtype=float)
        out = np.empty((len(times), self.n_nodes, 2))
        for k, t in enumerate(times):
            out[k] = self.positions_at(float(t))
        return out


class _WaypointModel(MobilityModel):
    """Shared piecewise-linear machinery over per-node knot timelines."""

    def __init__(self, knots: list[tuple[np.ndarray, np.ndarray, np.ndarray]]):
        # knots: per node (t, x, y) arrays with nondecreasing t
        self._knots = knots
        self.n_nodes = len(knots)

    def positions_at(self, t: float) -> np.ndarray:
        out = np.empty((self.n_nodes, 2))
        for i, (tk, xk, yk) in enumerate(self._knots):
            out[i, 0] = np.interp(t, tk, xk)
            out[i, 1] = np.interp(t, tk, yk)
        return out

    def positions_grid(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        out = np.empty((len(times), self.n_nodes, 2))
        for i, (tk, xk, yk) in enumerate(self._knots):
            out[:, i, 0] = np.interp(times, tk, xk)
            out[:, i, 1] = np.interp(times, tk, yk)
        return out


class RandomWaypoint(_WaypointModel):
    """Alternating pauses and constant-speed legs to uniform waypoints."""

    def __init__(self, n_nodes: int, half_width: float, horizon: float,
                 rng: np.random.Generator, v_min: float = 1.0,
                 v_max: float = 5.0, max_pause: float = 1800.0):
        if not (0 < v_min <= v_max):
            raise ValueError("need 0 < v_min <= v_max")
        knots = []
        for _ in range(n_nodes):
            pos = rng.uniform(-half_width, half_width, 2)
            t = 0.0
            ts, xs, ys = [t], [pos[0]], [pos[1]]
            while t < horizon:
                pause = rng.uniform(0.0, max_pause)
                if pause > 0:
                    t += pause
                    ts.append(t)
                    xs.append(pos[0])
                    ys.append(pos[1])
                target = rng.uniform(-half_width, half_width, 2)
                speed = rng.uniform(v_min, v_max)
                leg = float(np.hypot(*(target - pos)))
                if leg > 0:
                    t += leg / speed
                    pos = target
                    ts.append(t)
                    xs.append(pos[0])
                    ys.append(pos[1])
            knots.append((np.array(ts), np.array(xs), np.array(ys)))
        super().__init__(knots)
        self.v_max = v_max


class GaussianClusters(MobilityModel):
    """Nodes ride fixed Gaussian offsets around centers on a circle.

    Node n belongs to cluster n mod n_clusters.  Centers sit at angle
    2*pi*c/n_clusters + angular_speed*t on a circle of center_radius.
    """

    def __init__(self, n_nodes: int, half_width: float,
                 rng: np.random.Generator, n_clusters: int = 8,
                 sigma: float = 200.0, angular_speed: float = 0.0,
                 center_radius: float = 3000.0):
        if n_clusters < 1:
            raise ValueError("need at least one cluster")
        self.n_nodes = n_nodes
        self.half_width = half_width
        self.n_clusters = n_clusters
        self.sigma = sigma
        self.angular_speed = angular_speed
        self.center_radius = center_radius
        self.cluster_of = np.arange(n_nodes) % n_clusters
        self.offsets = rng.normal(0.0, sigma, (n_nodes, 2)) if sigma > 0 else np.zeros((n_nodes, 2))
        self.base_angles = 2.0 * np.pi * np.arange(n_clusters) / n_clusters

    def centers_at(self, t: float) -> np.ndarray:
        ang = self.base_angles + self.angular_speed * t
        return self.center_radius * np.column_stack([np.cos(ang), np.sin(ang)])

    def positions_at(self, t: float) -> np.ndarray:
        pos = self.centers_at(t)[self.cluster_of] + self.offsets
        return clamp_to_area(pos, self.half_width)


class Trace(_WaypointModel):
    """Positions replayed from parsed waypoint lists."""

    def __init__(self, waypoints: list[tuple[np.ndarray, np.ndarray, np.ndarray]]):
        super().__init__(waypoints)


def parse_trace(text: str, shift_x: float = -4000.0,
                shift_y: float = -4000.0) -> Trace:
    """Parse trace text: one line per node of "t x y" triples.

    Lines starting with '#' are metadata and skipped.  Times must be
    strictly increasing per node.  Coordinates are shifted by
    (shift_x, shift_y) so [0, 8 km]^2 traces land on the centered area.
    """
    waypoints = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) % 3 != 0:
            raise ValueError(f"trace line {lineno}: token count not a multiple of 3")
        try:
            values = np.array([float(tok) for tok in tokens])
        except ValueError as exc:
            raise ValueError(f"trace line {lineno}: {exc}") from exc
        triples = values.reshape(-1, 3)
        t = triples[:, 0]
        if np.any(np.diff(t) <= 0):
            raise ValueError(f"trace line {lineno}: times not strictly increasing")
        waypoints.append((t, triples[:, 1] + shift_x, triples[:, 2] + shift_y))
    if not waypoints:
        raise ValueError("trace file contains no node lines")
    return Trace(waypoints)


def load_trace(path: str, shift_x: float = -4000.0,
               shift_y: float = -4000.0) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh.read(), shift_x, shift_y)


def export_trace(model: MobilityModel, times, shift_x: float = 0.0,
                 shift_y: float = 0.0) -> str:
    """Render a model as trace text sampled at the given times.

    The shift is added on write (the inverse of the parse-time shift), so
    export(shift=+s) followed by parse(shift=-s) round-trips exactly.
    """
    times = np.asarray(times, dtype=float)
    grid = model.positions_grid(times)
    lines = []
    for i in range(model.n_nodes):
        parts = []
        for k, t in enumerate(times):
            parts.append(f"{float(t)!r} {float(grid[k, i, 0] + shift_x)!r} "
                         f"{float(grid[k, i, 1] + shift_y)!r}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
