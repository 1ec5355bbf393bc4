import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from probvoronoi.geometry import Point2D, UncertainDisc
from probvoronoi.workload import (ZIPF_CELLS, WorkloadSpec, gen_objects, gen_trajectory,
                                  load_objects, load_trajectory, save_objects, save_trajectory,
                                  zipf_cell_probs)


def test_spec_validation():
    for bad in (dict(dim=3), dict(distribution="normal"), dict(n=0), dict(size_min=40, size_max=30),
                dict(zipf_alpha=0)):
        with pytest.raises(ValueError):
            WorkloadSpec(**bad)


def test_single_object_inside_extent():
    (o,) = gen_objects(WorkloadSpec(n=1))
    assert o.radius <= o.center.x <= 10_000 - o.radius


@pytest.mark.parametrize("dist", ["uniform", "zipf"])
def test_ranges_2d(dist):
    objs = gen_objects(WorkloadSpec(n=10_000, distribution=dist, seed=1))
    r = np.array([o.radius for o in objs])
    c = np.array([[o.center.x, o.center.y] for o in objs])
    assert r.min() >= 2.5 and r.max() <= 15
    assert (c - r[:, None] >= 0).all() and (c + r[:, None] <= 10_000).all()
    assert [o.id for o in objs] == list(range(10_000))


def test_ranges_1d():
    objs = gen_objects(WorkloadSpec(dim=1, n=2000, seed=2))
    assert all(0 <= o.lower and o.upper <= 10_000 and 5 <= o.length <= 30 + 1e-9 for o in objs)


def test_determinism(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    save_objects(a, gen_objects(WorkloadSpec(n=300, distribution="zipf", seed=4)))
    save_objects(b, gen_objects(WorkloadSpec(n=300, distribution="zipf", seed=4)))
    assert a.read_bytes() == b.read_bytes()
    assert gen_objects(WorkloadSpec(n=5, seed=5)) != gen_objects(WorkloadSpec(n=5, seed=6))


def test_zipf_histogram_matches_direct_sampler():
    alpha, n = 1.0, 20_000
    objs = gen_objects(WorkloadSpec(n=n, distribution="zipf", zipf_alpha=alpha, seed=11))
    width = 10_000 / ZIPF_CELLS
    cells = np.array([int(o.center.x // width) for o in objs])
    # reference: a truncated Zipf law over cell ranks 1..100 (clipping keeps centres in their cell)
    ranks = np.arange(1, ZIPF_CELLS + 1)
    ref = ranks ** -alpha / np.sum(ranks ** -alpha)
    assert np.allclose(zipf_cell_probs(ZIPF_CELLS, alpha), ref)
    counts = np.bincount(cells, minlength=ZIPF_CELLS)
    assert counts.sum() == n
    _, p = stats.chisquare(counts, ref * n)
    assert p > 1e-3


def test_zipf_skews_towards_origin():
    objs = gen_objects(WorkloadSpec(n=4000, distribution="zipf", seed=3))
    assert np.median([o.center.x for o in objs]) < 1000


@given(st.sampled_from(["random", "directional"]), st.integers(1, 300), st.floats(0.1, 50),
       st.integers(0, 1000), st.sampled_from([1, 2]))
def test_trajectory_steps_and_extent(kind, steps, step_len, seed, dim):
    t = gen_trajectory(kind, steps, step_len, 200.0, seed, dim=dim)
    assert len(t) == steps and t.dim == dim
    pts = t.points.reshape(len(t), -1)
    assert (pts >= 0).all() and (pts <= 200).all()
    if steps > 1:
        d = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        assert np.allclose(d, step_len, atol=1e-9, rtol=0)


def test_trajectory_single_point_and_errors():
    assert len(gen_trajectory("random", 1, 5.0, 100.0, 0)) == 1
    with pytest.raises(ValueError):
        gen_trajectory("zigzag", 5, 5.0, 100.0, 0)
    with pytest.raises(ValueError):
        gen_trajectory("random", 0, 5.0, 100.0, 0)


def test_directional_without_jitter_is_collinear():
    t = gen_trajectory("directional", 50, 5.0, 10_000.0, 9, jitter_deg=0.0)
    v = np.diff(t.points, axis=0)
    cross = v[:-1, 0] * v[1:, 1] - v[:-1, 1] * v[1:, 0]
    assert np.abs(cross).max() < 1e-9


def test_random_walk_changes_heading():
    t = gen_trajectory("random", 50, 5.0, 10_000.0, 9)
    v = np.diff(t.points, axis=0)
    assert np.abs(v[:-1, 0] * v[1:, 1] - v[:-1, 1] * v[1:, 0]).max() > 1


def test_dataset_round_trip(tmp_path):
    for spec in (WorkloadSpec(n=50, seed=1), WorkloadSpec(dim=1, n=50, seed=1)):
        objs = gen_objects(spec)
        save_objects(tmp_path / "d.txt", objs)
        assert load_objects(tmp_path / "d.txt") == objs
    raw = (tmp_path / "d.txt").read_bytes()
    assert raw.startswith(b"# pvd-dataset v1 dim=1\n") and b"\r" not in raw


def test_dataset_exact_parse(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("# pvd-dataset v1 dim=2\n7,1.5,0.1,3\nx9,1e3,2.000000000000001,0.25\n")
    assert load_objects(p) == [UncertainDisc(7, Point2D(1.5, 0.1), 3.0),
                               UncertainDisc("x9", Point2D(1000.0, 2.000000000000001), 0.25)]


def test_dataset_empty_and_malformed(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("")
    assert load_objects(p) == []
    p.write_text("# pvd-dataset v1 dim=1\n1,0,5\n2,3\n")
    with pytest.raises(ValueError, match="line 3"):
        load_objects(p)
    p.write_text("# pvd-dataset v1 dim=1\n1,0,abc\n")
    with pytest.raises(ValueError, match="line 2"):
        load_objects(p)
    p.write_text("id,x,y,r\n")
    with pytest.raises(ValueError, match="line 1"):
        load_objects(p)


def test_trajectory_round_trip(tmp_path):
    for dim in (1, 2):
        t = gen_trajectory("directional", 30, 5.0, 500.0, 2, dim=dim)
        save_trajectory(tmp_path / "t.txt", t)
        back = load_trajectory(tmp_path / "t.txt")
        assert np.array_equal(back.points, t.points) and math.isclose(back.step_len, 5.0)
