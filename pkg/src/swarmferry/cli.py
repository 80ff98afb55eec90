"""Command-line front end: single runs, sweeps, scaling bench, self-tests.

All outputs are plain CSV/JSON for external plotting; nothing interactive.
Exit codes: 0 ok, 1 bad configuration, 2 self-test failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import ferrying, oracles, sim, transport
from .config import ConfigError, ScenarioConfig, apply_override
from .ferrying import WeightMatrix


def _build_config(args) -> ScenarioConfig:
    data: dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise _IoFailure(str(exc)) from exc
        cfg = ScenarioConfig.from_json(text)
        data = cfg.to_dict()
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        apply_override(data, key, value)
    if getattr(args, "trace", None):
        data["mobility_source"] = {"kind": "TraceFile", "path": args.trace}
    if args.seed is not None:
        data["seed"] = args.seed
    return ScenarioConfig.from_dict(data)


class _IoFailure(Exception):
    pass


def _write(path: str, content: str) -> None:
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
    except OSError as exc:
        raise _IoFailure(str(exc)) from exc


def _cmd_run(args) -> int:
    config = _build_config(args)
    if args.print_config:
        sys.stdout.write(config.to_json())
        return 0
    report = sim.run(config)
    out = args.out
    _write(os.path.join(out, "report.json"),
           json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n")
    _write(os.path.join(out, "series.csv"), sim.series_csv(report))
    _write(os.path.join(out, "messages.csv"), sim.messages_csv(report))
    print(f"run complete: created={report.n_created} delivered={report.n_delivered} "
          f"p_deliver={report.p_deliver:.3f} "
          f"coverage={'-' if report.coverage_mean is None else f'{report.coverage_mean:.3f}'} "
          f"wall={report.wall_clock:.1f}s", file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    config = _build_config(args)
    try:
        values = [int(v) for v in args.values.split(",") if v]
    except ValueError as exc:
        raise ConfigError(f"bad --values list: {exc}") from exc
    reports = sim.sweep(config, args.axis, values, jobs=args.jobs)
    lines = [f"{args.axis},ttd_mean,ttd_ci95,p_deliver,coverage_mean,"
             f"distance_total,n_created,n_delivered"]
    for value, rep in zip(values, reports):
        def fmt(x):
            return "" if x is None else repr(x)
        lines.append(f"{value},{fmt(rep.ttd_mean)},{fmt(rep.ttd_ci95)},"
                     f"{rep.p_deliver!r},{fmt(rep.coverage_mean)},"
                     f"{fmt(rep.distance_total)},{rep.n_created},{rep.n_delivered}")
    _write(os.path.join(args.out, "sweep.csv"), "\n".join(lines) + "\n")
    return 0


def _parse_grid(tokens) -> tuple[list[int], list[int]]:
    m_values, n_values = None, None
    for tok in tokens:
        if "=" not in tok:
            raise ConfigError(f"bad --grid token {tok!r}")
        key, csv = tok.split("=", 1)
        values = [int(v) for v in csv.split(",") if v]
        if key.upper() == "M":
            m_values = values
        elif key.upper() == "N":
            n_values = values
        else:
            raise ConfigError(f"grid axis must be M or N, got {key!r}")
    if not m_values or not n_values:
        raise ConfigError("--grid needs both M=... and N=...")
    return m_values, n_values


def _cmd_bench(args) -> int:
    config = _build_config(args)
    m_values, n_values = _parse_grid(args.grid)
    rows = sim.bench(config, m_values, n_values, args.epochs, jobs=args.jobs)
    lines = ["n_users,n_uavs,seconds"]
    for m, n, seconds in rows:
        lines.append(f"{m},{n},{seconds!r}")
        print(f"bench M={m} N={n}: {seconds:.2f}s for {args.epochs} epochs",
              file=sys.stderr)
    _write(os.path.join(args.out, "bench.csv"), "\n".join(lines) + "\n")
    return 0


# -- self-test suites --------------------------------------------------------

def _selftest_transport(rng) -> tuple[int, int]:
    ok = total = 0
    for _ in range(300):
        total += 1
        rows = int(rng.integers(1, 7))
        cols = int(rng.integers(1, 4))
        supplies = rng.integers(0, 4, rows)
        while not 0 < supplies.sum() <= 3 * cols:
            supplies = rng.integers(0, 4, rows)
        target = int(supplies.sum())
        # spread the target over the columns one unit at a time so the
        # instance is balanced by construction, never by rejection
        demands = np.zeros(cols, dtype=np.int64)
        for _ in range(target):
            open_cols = np.flatnonzero(demands < 3)
            demands[open_cols[int(rng.integers(len(open_cols)))]] += 1
        cost = np.round(rng.uniform(0, 10, (rows, cols)), 3)
        problem = transport.TransportProblem(
            supplies=supplies.astype(np.int64),
            demands=demands.astype(np.int64), cost=cost)
        got = transport.solve(problem).total_cost
        want = oracles.min_cost_flow_bruteforce(supplies, demands, cost)
        if abs(got - want) <= 1e-9:
            ok += 1
    for _ in range(250):
        total += 1
        m = int(rng.integers(1, 7))
        n = int(rng.integers(1, 4))
        cap = int(rng.integers(1, 4))
        users = rng.uniform(-1000, 1000, (m, 2))
        uavs = rng.uniform(-1000, 1000, (n, 2))
        kind = [transport.CostKind.INDICATOR, transport.CostKind.QOS,
                transport.CostKind.LEAKY_QOS][int(rng.integers(3))]
        problem = transport.build_problem(users, uavs, cap, kind, 500.0)
        got = transport.solve(problem).total_cost
        want = oracles.min_cost_flow_bruteforce(problem.supplies,
                                                problem.demands, problem.cost)
        if abs(got - want) <= 1e-9:
            ok += 1
    return ok, total


def _selftest_tsp(rng) -> tuple[int, int]:
    ok = total = 0
    for i in range(50):
        total += 1
        n = 3 + i % 6
        points = rng.uniform(0, 100, (n, 2))
        diff = points[:, None, :] - points[None, :, :]
        d = np.sqrt((diff ** 2).sum(axis=2))
        tour = ferrying.solve_tsp(d)
        got = float(d[tour, np.roll(tour, -1)].sum())
        want, _ = oracles.tsp_bruteforce(d)
        if abs(got - want) <= 1e-9:
            ok += 1
    return ok, total


def _selftest_qap(rng) -> tuple[int, int]:
    ok = total = 0
    w = WeightMatrix.binary_jump(6)
    for _ in range(20):
        total += 1
        points = rng.uniform(0, 100, (6, 2))
        diff = points[:, None, :] - points[None, :, :]
        d = np.sqrt((diff ** 2).sum(axis=2))
        pi = ferrying.solve_qap_ga(d, w, 100, 100, 0.8, 0.4, rng)
        got = ferrying.qap_cost(d, w, pi)
        want, _ = oracles.qap_bruteforce(d, w.w)
        if got <= want * 1.05 + 1e-9:
            ok += 1
    return ok, total


def _selftest_cx(rng) -> tuple[int, int]:
    ok = total = 0
    for _ in range(200):
        total += 1
        n = int(rng.integers(2, 13))
        a = rng.permutation(n)
        b = rng.permutation(n)
        ca, cb = ferrying.cycle_crossover(a, b)
        try:
            oracles.check_cx_properties(a, b, ca, cb)
            sa, sb = ferrying.cycle_crossover(a, a.copy())
            if not (np.array_equal(sa, a) and np.array_equal(sb, a)):
                raise AssertionError("equal parents must clone")
            ok += 1
        except AssertionError:
            pass
    return ok, total


def _cmd_selftest(args) -> int:
    rng = np.random.default_rng(20260817)
    failures = 0
    for name, suite in [("transport", _selftest_transport),
                        ("tsp", _selftest_tsp),
                        ("qap", _selftest_qap),
                        ("cx", _selftest_cx)]:
        ok, total = suite(rng)
        print(f"{name}: {ok}/{total} ok")
        if ok != total:
            failures += 1
    return 2 if failures else 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmferry",
        description="UAV swarm coverage and data-ferrying simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_out=True):
        p.add_argument("--config", help="scenario JSON file")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="config override, repeatable")
        if with_out:
            p.add_argument("--out", default="out", help="output directory")

    p_run = sub.add_parser("run", help="single scenario run")
    common(p_run)
    p_run.add_argument("--trace", help="trace file (sets TraceFile mobility)")
    p_run.add_argument("--print-config", action="store_true",
                       help="print effective config JSON and exit")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run across a parameter axis")
    common(p_sweep)
    p_sweep.add_argument("--trace", help="trace file (sets TraceFile mobility)")
    p_sweep.add_argument("--axis", required=True,
                         choices=list(sim.SWEEP_AXES))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated integer values")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bench = sub.add_parser("bench", help="time the control loop on a grid")
    common(p_bench)
    p_bench.add_argument("--grid", nargs="+", required=True,
                         metavar="AXIS=V1,V2", help="e.g. --grid M=100,400 N=10,25")
    p_bench.add_argument("--epochs", type=int, default=100)
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.set_defaults(func=_cmd_bench)

    p_self = sub.add_parser("selftest", help="run brute-force oracle suites")
    p_self.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except _IoFailure as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
