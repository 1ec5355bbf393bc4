import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from probvoronoi.geometry import Mbr
from probvoronoi.index import IoCounter, MbrTree, build


def _boxes(rng, n, span=1000.0, size=30.0):
    lo = rng.uniform(0, span, (n, 2))
    wh = rng.uniform(0, size, (n, 2))
    return [(Mbr(x, y, x + w, y + h), a) for a, ((x, y), (w, h)) in enumerate(zip(lo, wh))]


def _check_structure(tree: MbrTree):
    leaves, seen = 0, []
    for nd in tree.nodes():
        assert len(nd.children) <= tree.capacity
        if nd.is_leaf:
            leaves += 1
            for box, p in nd.children:
                assert nd.mbr.contains_point(box.xmin, box.ymin)
                assert nd.mbr.contains_point(box.xmax, box.ymax)
                seen.append(p)
        else:
            for c in nd.children:
                assert c.level == nd.level - 1
                assert nd.mbr.contains_point(c.mbr.xmin, c.mbr.ymin)
                assert nd.mbr.contains_point(c.mbr.xmax, c.mbr.ymax)
    return sorted(seen)


def test_single_entry_root_only():
    tree = build([(Mbr(0, 0, 1, 1), "a")])
    assert tree.height == 1 and tree.node_count == 1


def test_fifty_one_entries_height_two():
    rng = np.random.default_rng(0)
    tree = build(_boxes(rng, 51), capacity=50)
    assert tree.height == 2


def test_capacity_validated():
    with pytest.raises(ValueError):
        MbrTree([], capacity=1)


def test_empty_index():
    tree = build([])
    c = IoCounter()
    assert tree.window_query(Mbr(0, 0, 1, 1), c) == [] and c.node_accesses == 1
    assert list(tree.mindist_scan(0, 0)) == []


def test_ten_thousand_entries_reachable_and_nested():
    rng = np.random.default_rng(1)
    entries = _boxes(rng, 10_000, span=10_000.0)
    tree = build(entries)
    assert _check_structure(tree) == list(range(10_000))


def test_whole_space_window_visits_every_node():
    rng = np.random.default_rng(2)
    tree = build(_boxes(rng, 3000))
    c = IoCounter()
    got = tree.window_query(Mbr(-1, -1, 2000, 2000), c)
    assert sorted(got) == list(range(3000))
    assert c.node_accesses == tree.node_count


def test_disjoint_window_touches_root_only():
    rng = np.random.default_rng(3)
    tree = build(_boxes(rng, 500))
    c = IoCounter()
    assert tree.window_query(Mbr(5000, 5000, 6000, 6000), c) == []
    assert c.node_accesses >= 1


def test_mindist_scan_examples():
    tree = build([(Mbr(0, 0, 1, 1), "near"), (Mbr(100, 100, 101, 101), "far")])
    assert [p for _, p in tree.mindist_scan(2, 2)] == ["near", "far"]
    key, first = next(tree.mindist_scan(100.5, 100.5))
    assert (key, first) == (0.0, "far")


def test_point_query_cheaper_than_full_scan():
    rng = np.random.default_rng(4)
    tree = build(_boxes(rng, 5000, span=10_000.0))
    for x, y in rng.uniform(0, 10_000, (20, 2)):
        c = IoCounter()
        tree.point_query(x, y, c)
        assert c.node_accesses < tree.node_count


@given(st.integers(0, 10_000), st.integers(1, 400), st.integers(2, 20))
def test_window_and_point_queries_match_linear_scan(seed, n, cap):
    rng = np.random.default_rng(seed)
    entries = _boxes(rng, n, span=200.0)
    tree = build(entries, capacity=cap)
    for _ in range(5):
        x0, y0 = rng.uniform(-20, 220, 2)
        w, h = rng.uniform(0, 60, 2)
        win = Mbr(x0, y0, x0 + w, y0 + h)
        assert sorted(tree.window_query(win)) == sorted(p for b, p in entries if b.intersects(win))
        px, py = rng.uniform(0, 200, 2)
        assert sorted(tree.point_query(px, py)) == sorted(
            p for b, p in entries if b.contains_point(px, py))


@given(st.integers(0, 10_000), st.integers(1, 300))
def test_mindist_scan_matches_sort(seed, n):
    rng = np.random.default_rng(seed)
    entries = _boxes(rng, n, span=200.0)
    tree = build(entries, capacity=8)
    x, y = rng.uniform(-50, 250, 2)
    c = IoCounter()
    got = list(tree.mindist_scan(x, y, c))
    keys = [k for k, _ in got]
    assert keys == sorted(keys)
    assert sorted(p for _, p in got) == list(range(n))
    want = sorted(b.mindist(x, y) for b, _ in entries)
    assert np.allclose(keys, want)
    assert c.node_accesses == tree.node_count
