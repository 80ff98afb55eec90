"""Joint coverage-and-ferrying simulation.

The epoch loop: refresh users from mobility, retrack cluster medoids by
alternating minimization (warm started), command the next jump once the
fleet has dwelt a full rotation interval at its clusters, re-solving the
rotation order whenever a round wrapped, then fly UAVs in 1 s sub-ticks
that drive the DTN engine.  Baselines replace the control layer with
circular orbits or random-waypoint flight; NoUAV drops the swarm entirely.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import clustering
from .config import (ConfigError, GaussianClustersSource, RotationMode,
                     RwpSource, ScenarioConfig, TraceSource)
from .dtn import DtnWorld
from .ferrying import (RotationSchedule, WeightKind, WeightMatrix,
                       make_schedule, solve_qap_ga, solve_tsp)
from .geometry import move_toward, move_toward_many, pairwise_distances
from .mobility import (GaussianClusters, MobilityModel, RandomWaypoint,
                       load_trace)
from .rng import stream_rng
from .transport import coverage_fraction

ARRIVAL_TOLERANCE = 10.0  # meters; gates the round-end re-solve


def build_mobility(config: ScenarioConfig) -> MobilityModel:
    src = config.mobility_source
    rng = stream_rng(config.seed, "mobility")
    if isinstance(src, RwpSource):
        return RandomWaypoint(config.n_users, config.area_half_width,
                              config.total_time, rng, v_min=src.v_min,
                              v_max=src.v_max, max_pause=src.max_pause)
    if isinstance(src, GaussianClustersSource):
        return GaussianClusters(config.n_users, config.area_half_width, rng,
                                n_clusters=src.n_clusters, sigma=src.sigma,
                                angular_speed=src.angular_speed,
                                center_radius=src.center_radius)
    if isinstance(src, TraceSource):
        model = load_trace(src.path, src.shift_x, src.shift_y)
        if model.n_nodes != config.n_users:
            raise ConfigError(
                f"trace has {model.n_nodes} nodes, config expects {config.n_users}")
        return model
    raise ConfigError(f"unsupported mobility source {src!r}")


@dataclass
class RunReport:
    config: ScenarioConfig
    ttd_mean: float | None
    ttd_ci95: float | None
    p_deliver: float
    coverage_mean: float | None
    distance_total: float | None
    n_created: int
    n_delivered: int
    coverage_series: list = field(default_factory=list)   # (t, fraction)
    epoch_rows: list = field(default_factory=list)        # dict rows for CSV
    messages: list = field(default_factory=list)          # Message ledger
    wall_clock: float = 0.0

    def to_json_dict(self) -> dict:
        # wall_clock is intentionally excluded: reports must be byte-stable
        # across identical (config, seed) invocations.
        return {
            "config": self.config.to_dict(),
            "ttd_mean": self.ttd_mean,
            "ttd_ci95": self.ttd_ci95,
            "p_deliver": self.p_deliver,
            "coverage_mean": self.coverage_mean,
            "distance_total": self.distance_total,
            "n_created": self.n_created,
            "n_delivered": self.n_delivered,
        }


def series_csv(report: RunReport) -> str:
    lines = ["t,coverage,delivered,created,distance_total"]
    for row in report.epoch_rows:
        cov = "" if row["coverage"] is None else repr(row["coverage"])
        dist = "" if row["distance_total"] is None else repr(row["distance_total"])
        lines.append(f"{row['t']},{cov},{row['delivered']},{row['created']},{dist}")
    return "\n".join(lines) + "\n"


def messages_csv(report: RunReport) -> str:
    lines = ["id,created_at,delivered_at,source,destination"]
    for m in report.messages:
        delivered = "" if m.delivered_at is None else m.delivered_at
        lines.append(f"{m.id},{m.created_at},{delivered},{m.source},{m.destination}")
    return "\n".join(lines) + "\n"


class _FerryControl:
    """Clustered-mode controller: AM tracking plus the rotation schedule."""

    def __init__(self, config: ScenarioConfig, rng_init, rng_ga):
        self.config = config
        self.kind = (WeightKind.CYCLE if config.rotation_mode is RotationMode.TSP
                     else WeightKind.BINARY_JUMP)
        n = config.n_uavs
        self.weights = (WeightMatrix.cycle(n) if self.kind is WeightKind.CYCLE
                        else WeightMatrix.binary_jump(n)) if n >= 2 else None
        self.rng_init = rng_init
        self.rng_ga = rng_ga
        self.state: clustering.ClusterState | None = None
        self.schedule: RotationSchedule | None = None
        self.needs_solve = True
        self.reached = np.zeros(n, dtype=bool)  # latched per rotation leg
        self.arrived_at: int | None = None

    def _solve_order(self) -> np.ndarray:
        d = pairwise_distances(self.state.medoids, self.state.medoids)
        if self.kind is WeightKind.CYCLE:
            return solve_tsp(d)
        c = self.config
        # warm-start with the incumbent order: among equal-cost optima the
        # rotation then continues instead of scrambling mid-spread traffic
        warm = self.schedule.pi if self.schedule is not None else None
        return solve_qap_ga(d, self.weights, c.ga_iterations, c.ga_population,
                            c.ga_crossover_prob, c.ga_mutation_prob, self.rng_ga,
                            warm_start=warm)

    def targets(self) -> np.ndarray:
        """Current target medoid position per UAV."""
        if self.schedule is None:
            return self.state.medoids[np.zeros(self.config.n_uavs, dtype=np.int64)]
        return self.state.medoids[self.schedule.targets()]

    def uav_of_cluster(self) -> np.ndarray:
        """Inverse of targets: which UAV tracks each cluster."""
        out = np.zeros(self.config.n_uavs, dtype=np.int64)
        if self.schedule is not None:
            out[self.schedule.targets()] = np.arange(self.config.n_uavs)
        return out

    def _aligned_alpha(self, order: np.ndarray, uavs: np.ndarray) -> int:
        """Offset that matches the solved order to where UAVs already are.

        The rotation objective is invariant under shifting alpha (the weight
        matrices are circulant), so of the n equivalent labelings we pick the
        one with the least total flight distance from current positions.
        """
        med = self.state.medoids
        n = len(order)
        best_a, best = 0, np.inf
        for a in range(n):
            tgt = med[order[(np.arange(n) + a) % n]]
            tot = float(np.hypot(*(uavs - tgt).T).sum())
            if tot < best - 1e-9:
                best, best_a = tot, a
        return best_a

    def _fresh_schedule(self, uavs: np.ndarray) -> RotationSchedule:
        order = self._solve_order()
        return make_schedule(order, self.kind,
                             alpha=self._aligned_alpha(order, uavs))

    def epoch(self, users: np.ndarray, uavs: np.ndarray, t: int) -> np.ndarray:
        """Run one control epoch at time t; returns UAV target positions.

        A jump is commanded once every UAV has reached its new cluster and
        the fleet has then dwelt a full rotation interval; commanding a jump
        mid-flight would detach the schedule from the physical rotation.
        Arrivals latch per leg, so a medoid that wanders afterwards keeps
        its UAV in tracking mode without rewinding the dwell clock.  The
        round-end re-solve happens at the jump that opens the new round,
        when positions are settled.
        """
        c = self.config
        if self.state is None:
            idx = clustering.initial_indices(c.n_users, c.n_uavs, self.rng_init)
        else:
            idx = clustering.project_to_users(self.state.medoids, users)
        self.state = clustering.run_am(users, idx, c.uav_capacity,
                                       c.cell_range, c.am_iterations)
        if c.n_uavs >= 2:
            if self.schedule is None:
                self.schedule = self._fresh_schedule(uavs)
                self.needs_solve = False
            else:
                if self.arrived_at is None:
                    # arrived = close enough to exchange data with the
                    # cluster, i.e. within DTN range of its medoid
                    tol = max(ARRIVAL_TOLERANCE, c.dtn_range)
                    gaps = np.hypot(*(uavs - self.targets()).T)
                    self.reached |= gaps <= tol
                    if np.all(self.reached):
                        self.arrived_at = t
                if (self.arrived_at is not None
                        and t - self.arrived_at >= c.rotation_interval):
                    if self.needs_solve:
                        self.schedule = self._fresh_schedule(uavs)
                        self.needs_solve = False
                    self.schedule = self.schedule.advance()
                    if self.schedule.round_position == 0:
                        self.needs_solve = True
                    self.reached[:] = False
                    self.arrived_at = None
        return self.targets()


def _ttd_stats(ttds: np.ndarray) -> tuple[float | None, float | None]:
    if len(ttds) == 0:
        return None, None
    mean = float(ttds.mean())
    if len(ttds) < 2:
        return mean, None
    ci = 1.96 * float(ttds.std(ddof=1)) / len(ttds) ** 0.5
    return mean, ci


def run(config: ScenarioConfig) -> RunReport:
    """Execute one full scenario; deterministic per (config, seed)."""
    config.validate()
    start = time.perf_counter()
    c = config
    mode = c.rotation_mode
    clustered = mode in (RotationMode.TSP, RotationMode.BINARY_JUMPING)
    has_uavs = mode is not RotationMode.NO_UAV
    m, n = c.n_users, c.n_uavs
    hw = c.area_half_width

    model = build_mobility(c)
    grid = model.positions_grid(np.arange(c.total_time + 1, dtype=float))

    rng_init = stream_rng(c.seed, "init")
    rng_dtn = stream_rng(c.seed, "dtn")
    rng_ga = stream_rng(c.seed, "ga")
    rng_heur = stream_rng(c.seed, "heuristics")

    world = DtnWorld(m, n if has_uavs else 0, c.dtn_range, c.dtn_speed,
                     c.dtn_buffer, c.dtn_msg_size, c.dtn_ttl)

    control = _FerryControl(c, rng_init, rng_ga) if clustered else None
    uavs = rng_init.uniform(-hw, hw, (n, 2)) if has_uavs else np.zeros((0, 2))
    odometry = np.zeros(n) if has_uavs else np.zeros(0)

    # circular-baseline state: orbit radii, polar angle once on-circle
    if mode is RotationMode.CIRCULAR:
        circ_r = hw * np.arange(1, n + 1) / n
        circ_angle = np.zeros(n)
        on_circle = np.zeros(n, dtype=bool)
    if mode is RotationMode.RWP_HEURISTIC:
        heur_targets = rng_heur.uniform(-hw, hw, (n, 2))

    coverage_series: list[tuple[int, float]] = []
    epoch_rows: list[dict] = []

    for epoch in range(c.n_epochs):
        t0 = epoch * c.step
        users = grid[t0]

        if clustered:
            target_pos = control.epoch(users, uavs, t0)
            if c.idealized_clusters:
                uav_of = control.uav_of_cluster()
                base_groups = [list(map(int, members))
                               for members in control.state.assignments]
                medoids = control.state.medoids

        for s in range(1, c.step + 1):
            t_new = t0 + s
            if has_uavs:
                if clustered:
                    new_uavs = move_toward_many(uavs, target_pos, c.uav_speed, 1.0)
                    odometry += np.hypot(*(new_uavs - uavs).T)
                    uavs = new_uavs
                elif mode is RotationMode.CIRCULAR:
                    for j in range(n):
                        pos = uavs[j]
                        if not on_circle[j]:
                            ang = float(np.arctan2(pos[1], pos[0]))
                            proj = circ_r[j] * np.array([np.cos(ang), np.sin(ang)])
                            gap = float(np.hypot(*(proj - pos)))
                            if gap < 1e-9:
                                on_circle[j] = True
                                circ_angle[j] = ang
                            elif gap <= c.uav_speed:
                                odometry[j] += gap
                                uavs[j] = proj
                                on_circle[j] = True
                                circ_angle[j] = ang
                                continue
                            else:
                                uavs[j] = move_toward(pos, proj, c.uav_speed, 1.0)
                                odometry[j] += c.uav_speed
                                continue
                        circ_angle[j] += c.uav_speed / circ_r[j]
                        uavs[j] = circ_r[j] * np.array(
                            [np.cos(circ_angle[j]), np.sin(circ_angle[j])])
                        odometry[j] += c.uav_speed
                elif mode is RotationMode.RWP_HEURISTIC:
                    for j in range(n):
                        gap = float(np.hypot(*(heur_targets[j] - uavs[j])))
                        if gap <= c.uav_speed:
                            odometry[j] += gap
                            uavs[j] = heur_targets[j].copy()
                            heur_targets[j] = rng_heur.uniform(-hw, hw, 2)
                        else:
                            new = move_toward(uavs[j], heur_targets[j],
                                              c.uav_speed, 1.0)
                            odometry[j] += c.uav_speed
                            uavs[j] = new
                node_pos = np.vstack([grid[t_new], uavs])
            else:
                node_pos = grid[t_new]

            if t_new % c.dtn_msg_interval == 0:
                world.spawn_message(t_new, rng_dtn)
            world.step(node_pos, t_new)
            if clustered and c.idealized_clusters:
                groups = []
                for i, group in enumerate(base_groups):
                    uav_j = int(uav_of[i])
                    if np.hypot(*(uavs[uav_j] - medoids[i])) <= c.dtn_range:
                        group = group + [m + uav_j]
                    groups.append(group)
                world.idealized_sync(groups, t_new)

        t_end = t0 + c.step
        coverage = None
        if has_uavs:
            coverage = coverage_fraction(grid[t_end], uavs, c.uav_capacity,
                                         c.cell_range)
            coverage_series.append((t_end, coverage))
        epoch_rows.append({
            "t": t_end,
            "coverage": coverage,
            "delivered": world.delivered_count,
            "created": world.created_count(),
            "distance_total": float(odometry.sum()) if has_uavs else None,
        })

    ttds = world.ttds()
    ttd_mean, ttd_ci = _ttd_stats(ttds)
    created = world.created_count()
    delivered = len(ttds)
    return RunReport(
        config=c,
        ttd_mean=ttd_mean,
        ttd_ci95=ttd_ci,
        p_deliver=delivered / created if created else 0.0,
        coverage_mean=(float(np.mean([v for _, v in coverage_series]))
                       if coverage_series else None),
        distance_total=float(odometry.sum()) if has_uavs else None,
        n_created=created,
        n_delivered=delivered,
        coverage_series=coverage_series,
        epoch_rows=epoch_rows,
        messages=world.messages,
        wall_clock=time.perf_counter() - start,
    )


def run_baseline(config: ScenarioConfig) -> RunReport:
    if config.rotation_mode not in (RotationMode.CIRCULAR,
                                    RotationMode.RWP_HEURISTIC):
        raise ConfigError("run_baseline expects Circular or RWPHeuristic mode")
    return run(config)


SWEEP_AXES = ("n_uavs", "rotation_interval")


def sweep(config: ScenarioConfig, axis: str, values, jobs: int = 1) -> list[RunReport]:
    """Run the scenario once per axis value; seeds offset per value."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    configs = []
    for i, v in enumerate(values):
        d = config.to_dict()
        d[axis] = int(v)
        d["seed"] = config.seed + i
        configs.append(ScenarioConfig.from_dict(d))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, configs))
    return [run(cfg) for cfg in configs]


def bench_cell(config: ScenarioConfig, m: int, n: int, epochs: int) -> float:
    """Wall-clock seconds for `epochs` control epochs at scale (m, n).

    Times the per-epoch control work (clustering, rotation planning, UAV
    movement) with capacity matched to ceil(m/n); message traffic is not
    part of the control path and is excluded.
    """
    d = config.to_dict()
    d.update(n_users=m, n_uavs=n, uav_capacity=-(-m // n),
             total_time=epochs * config.step)
    if d["rotation_mode"] not in ("TSP", "BinaryJumping"):
        d["rotation_mode"] = "TSP"
    cfg = ScenarioConfig.from_dict(d)
    model = build_mobility(cfg)
    rng_init = stream_rng(cfg.seed, "init")
    rng_ga = stream_rng(cfg.seed, "ga")
    control = _FerryControl(cfg, rng_init, rng_ga)
    uavs = rng_init.uniform(-cfg.area_half_width, cfg.area_half_width, (n, 2))
    epoch_users = [model.positions_at(float(e * cfg.step)) for e in range(epochs)]
    # one throwaway epoch on a scratch controller so jit compilation and
    # cache warmup stay out of the timed loop
    _FerryControl(cfg, stream_rng(cfg.seed, "init"),
                  stream_rng(cfg.seed, "ga")).epoch(epoch_users[0], uavs, 0)
    start = time.perf_counter()
    for e in range(epochs):
        targets = control.epoch(epoch_users[e], uavs, e * cfg.step)
        uavs = move_toward_many(uavs, targets, cfg.uav_speed, cfg.step)
    return time.perf_counter() - start


def bench(config: ScenarioConfig, m_values, n_values, epochs: int,
          jobs: int = 1) -> list[tuple[int, int, float]]:
    """Grid of (m, n, seconds) control-loop timings."""
    cells = [(m, n) for m in m_values for n in n_values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            times = list(pool.map(_bench_star,
                                  [(config, m, n, epochs) for m, n in cells]))
        return [(m, n, t) for (m, n), t in zip(cells, times)]
    return [(m, n, bench_cell(config, m, n, epochs)) for m, n in cells]


def _bench_star(args) -> float:
    return bench_cell(*args)
