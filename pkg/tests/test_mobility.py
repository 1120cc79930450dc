import math

import numpy as np
import pytest

from mobgossip.analysis import exact_tv_curve
from mobgossip.core import derive_stream
from mobgossip.mobility import MOVES, MoveKernel, empirical_tv_to_uniform, positions_in_cells, step_all


def test_single_cell_grid_only_resamples_position():
    rng = derive_stream(1, "t")
    k = MoveKernel(1, "edge_stay")
    cells = np.zeros((50, 2), dtype=np.int64)
    pos = positions_in_cells(cells, 1, rng)
    c2, p2 = step_all(cells, pos, k, rng)
    assert (c2 == 0).all()
    assert not np.array_equal(p2, pos)


def test_torus_move_frequencies():
    rng = derive_stream(2, "t")
    k = MoveKernel(8, "torus_wrap")
    cells = np.full((10 ** 6, 2), 4, dtype=np.int64)
    new = k.step(cells, rng)
    d = new - 4
    codes = (d[:, 0] + 1) * 3 + (d[:, 1] + 1)
    freq = np.bincount(codes, minlength=9) / len(codes)
    assert np.abs(freq - 1 / 9).max() < 0.002


def test_edge_stay_corner_stay_probability():
    k = MoveKernel(5, "edge_stay")
    probs = k.move_probs((0, 0))
    assert probs[(0, 0)] == pytest.approx(6 / 9)
    assert sum(probs.values()) == pytest.approx(1.0)
    assert set(probs) == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_edge_stay_corner_empirical():
    rng = derive_stream(3, "t")
    k = MoveKernel(5, "edge_stay")
    new = k.step(np.zeros((200_000, 2), dtype=np.int64), rng)
    stay = (new == 0).all(axis=1).mean()
    assert abs(stay - 6 / 9) < 0.005


@pytest.mark.parametrize("s", [1, 2, 3, 6])
@pytest.mark.parametrize("boundary", ["edge_stay", "torus_wrap", "static"])
def test_kernel_rows_sum_to_one(s, boundary):
    P = MoveKernel(s, boundary).matrix()
    assert np.allclose(P.sum(axis=1), 1.0)
    if boundary == "static":
        assert np.array_equal(P, np.eye(s * s))


@pytest.mark.parametrize("boundary", ["torus_wrap", "edge_stay"])
def test_uniform_is_stationary(boundary):
    # edge_stay is symmetric too, so uniform is stationary for both boundaries
    P = MoveKernel(7, boundary).matrix()
    u = np.full(49, 1 / 49)
    assert np.allclose(u @ P, u, atol=1e-15)


def test_boundaries_agree_away_from_edges():
    s = 9
    a, b = MoveKernel(s, "edge_stay"), MoveKernel(s, "torus_wrap")
    for x in range(1, s - 1):
        for y in range(1, s - 1):
            assert a.move_probs((x, y)) == b.move_probs((x, y))


@pytest.mark.parametrize("boundary", ["torus_wrap", "edge_stay"])
def test_exact_tv_non_increasing(boundary):
    tv = exact_tv_curve(6, boundary, 120)
    assert (np.diff(tv) <= 1e-12).all()


def test_positions_stay_inside_their_cells():
    rng = derive_stream(4, "t")
    s = 7
    k = MoveKernel(s, "edge_stay")
    cells = rng.integers(0, s, size=(500, 2))
    pos = positions_in_cells(cells, s, rng)
    for _ in range(20):
        cells, pos = step_all(cells, pos, k, rng)
        assert ((cells >= 0) & (cells < s)).all()
        assert np.array_equal(np.floor(pos * s).astype(int), cells)


def test_static_is_frozen():
    rng = derive_stream(5, "t")
    cells = rng.integers(0, 4, size=(10, 2))
    pos = positions_in_cells(cells, 4, rng)
    c2, p2 = step_all(cells, pos, MoveKernel(4, "static"), rng)
    assert np.array_equal(c2, cells) and np.array_equal(p2, pos)


def test_moves_are_the_nine_neighbours():
    assert len({tuple(m) for m in MOVES}) == 9
    assert np.abs(MOVES).max() == 1


def test_empirical_tv_at_zero_is_point_mass():
    k = MoveKernel(4, "torus_wrap")
    assert empirical_tv_to_uniform(k, 0, 10, derive_stream(0, "t")) == pytest.approx(1 - 1 / 16)


def test_empirical_tv_single_cell():
    k = MoveKernel(1, "edge_stay")
    for t in (0, 3):
        assert empirical_tv_to_uniform(k, t, 100, derive_stream(0, "t")) == 0.0


def test_empirical_tv_matches_exact_after_mixing():
    s, n = 8, 64
    t = round(s * s * math.log(n))
    k = MoveKernel(s, "torus_wrap")
    exact = exact_tv_curve(s, "torus_wrap", t)[-1]
    mc = empirical_tv_to_uniform(k, t, 10 ** 5, derive_stream(6, "t"))
    assert mc <= 0.05
    # with 1e5 walks over 64 cells the sampling floor of the TV estimate is about 0.01,
    # so the closeness check uses 4e5 walks
    mc_big = empirical_tv_to_uniform(k, t, 4 * 10 ** 5, derive_stream(7, "t"))
    assert abs(mc_big - exact) < 0.01


def test_invalid_kernel_arguments():
    with pytest.raises(ValueError):
        MoveKernel(0)
    with pytest.raises(ValueError):
        MoveKernel(3, "wrap")
    with pytest.raises(ValueError):
        empirical_tv_to_uniform(MoveKernel(3), -1, 10, derive_stream(0, "t"))
