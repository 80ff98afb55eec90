import numpy as np
import pytest

from swarmferry.mobility import (GaussianClusters, RandomWaypoint, Trace,
                                 export_trace, load_trace, parse_trace)


def test_rwp_stays_in_area_and_under_speed():
    rng = np.random.default_rng(40)
    hw, vmax = 4000.0, 5.0
    model = RandomWaypoint(8, hw, 3600.0, rng, v_min=1.0, v_max=vmax,
                           max_pause=600.0)
    times = np.arange(0.0, 3600.0, 1.0)
    grid = model.positions_grid(times)
    assert np.abs(grid).max() <= hw
    steps = np.hypot(np.diff(grid[:, :, 0], axis=0),
                     np.diff(grid[:, :, 1], axis=0))
    assert steps.max() <= vmax + 1e-9


def test_rwp_actually_moves_and_pauses():
    rng = np.random.default_rng(41)
    model = RandomWaypoint(4, 4000.0, 7200.0, rng, max_pause=900.0)
    grid = model.positions_grid(np.arange(0.0, 7200.0, 1.0))
    steps = np.hypot(np.diff(grid[:, :, 0], axis=0),
                     np.diff(grid[:, :, 1], axis=0))
    assert steps.max() > 0.5
    assert (steps < 1e-12).any()  # some tick falls inside a pause


def test_rwp_same_seed_same_paths():
    a = RandomWaypoint(3, 1000.0, 600.0, np.random.default_rng(42))
    b = RandomWaypoint(3, 1000.0, 600.0, np.random.default_rng(42))
    t = np.linspace(0, 600, 61)
    assert np.array_equal(a.positions_grid(t), b.positions_grid(t))


def test_rwp_rejects_bad_speeds():
    with pytest.raises(ValueError):
        RandomWaypoint(2, 100.0, 60.0, np.random.default_rng(0),
                       v_min=3.0, v_max=2.0)


def test_gaussian_clusters_zero_sigma_sits_on_centers():
    rng = np.random.default_rng(43)
    model = GaussianClusters(8, 4000.0, rng, n_clusters=4, sigma=0.0,
                             center_radius=2000.0)
    pos = model.positions_at(0.0)
    centers = model.centers_at(0.0)
    assert np.allclose(pos, centers[np.arange(8) % 4])
    # static by default
    assert np.array_equal(pos, model.positions_at(500.0))


def test_gaussian_clusters_rotation():
    rng = np.random.default_rng(44)
    w = 2 * np.pi / 100.0
    model = GaussianClusters(4, 4000.0, rng, n_clusters=4, sigma=0.0,
                             angular_speed=w, center_radius=1000.0)
    # after a quarter period every center advances one slot
    assert np.allclose(model.centers_at(25.0)[0], model.centers_at(0.0)[1],
                       atol=1e-9)


def test_gaussian_clusters_clamped():
    rng = np.random.default_rng(45)
    model = GaussianClusters(50, 3000.0, rng, n_clusters=2, sigma=800.0,
                             center_radius=2900.0)
    assert np.abs(model.positions_at(0.0)).max() <= 3000.0


def test_parse_trace_basic():
    text = "# a comment\n0 0 0 10 100 0\n0 50 50 10 50 150\n"
    trace = parse_trace(text, shift_x=0.0, shift_y=0.0)
    assert trace.n_nodes == 2
    pos = trace.positions_at(5.0)
    assert np.allclose(pos[0], [50.0, 0.0])
    assert np.allclose(pos[1], [50.0, 100.0])
    # held flat outside the span
    assert np.allclose(trace.positions_at(99.0)[0], [100.0, 0.0])


def test_parse_trace_applies_shift():
    trace = parse_trace("0 4000 4000 10 5000 4000\n")
    assert np.allclose(trace.positions_at(0.0)[0], [0.0, 0.0])
    assert np.allclose(trace.positions_at(10.0)[0], [1000.0, 0.0])


@pytest.mark.parametrize("bad", [
    "0 1 2 3\n",            # token count not a multiple of 3
    "0 1 x\n",              # non-numeric
    "0 0 0 0 1 1\n",        # times not strictly increasing
    "# only comments\n",
])
def test_parse_trace_rejects(bad):
    with pytest.raises(ValueError):
        parse_trace(bad)


def test_trace_round_trip(tmp_path):
    rng = np.random.default_rng(46)
    model = GaussianClusters(6, 4000.0, rng, n_clusters=3, sigma=100.0)
    times = np.arange(0.0, 100.0, 10.0)
    text = export_trace(model, times, shift_x=4000.0, shift_y=4000.0)
    path = tmp_path / "users.trace"
    path.write_text(text)
    trace = load_trace(str(path))  # default shift undoes the export shift
    assert isinstance(trace, Trace)
    grid = model.positions_grid(times)
    again = trace.positions_grid(times)
    assert np.allclose(grid, again, atol=1e-9)
