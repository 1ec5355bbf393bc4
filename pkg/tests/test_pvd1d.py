import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from probvoronoi.geometry import UncertainInterval as IV
from probvoronoi.kernel import DEFAULT_CONFIG, pnn_probs
from probvoronoi.pvd1d import (Bisector1D, NoBisector, Pvd1D, bisector_by_lemma, candidate_objects,
                               dedupe_intervals, find_prob_bisector_1d, initial_bisector,
                               locate_1d, prob_bisector_1d, prob_voronoi_1d)

EPS, STEP = DEFAULT_CONFIG.prob_epsilon, DEFAULT_CONFIG.step


def _random_intervals(rng, n, extent):
    lengths = rng.uniform(5, 30, n)
    lows = rng.uniform(0, extent - lengths)
    return [IV(a, float(l), float(l + s)) for a, (l, s) in enumerate(zip(lows, lengths))]


def _gap_and_winner(objs, x):
    p = pnn_probs(objs, x)
    order = np.argsort(-p, kind="stable")
    return objs[order[0]].id, p[order[0]] - p[order[1]] if len(p) > 1 else 1.0


# -- closed forms -------------------------------------------------------------

def test_closed_form_equal_lengths_disjoint():
    assert bisector_by_lemma(IV(1, 0, 8), IV(2, 12, 20)) == [10]


def test_closed_form_shared_midpoint():
    assert bisector_by_lemma(IV(1, 0, 12), IV(2, 4, 8)) == [2, 10]


def test_closed_form_shared_lower_bound():
    assert bisector_by_lemma(IV(1, 0, 10), IV(2, 0, 4)) == [4.5]


def test_closed_form_shared_upper_bound():
    assert bisector_by_lemma(IV(1, 0, 10), IV(2, 6, 10)) == [(5 + 6) / 2]


def test_closed_form_does_not_apply_to_general_overlap():
    assert bisector_by_lemma(IV(1, 0, 10), IV(2, 4, 20)) is None


def test_closed_form_blocked_by_third_object_unless_equal_lengths():
    third = IV(3, 9, 11)
    pair = [IV(1, 0, 4), IV(2, 14, 24)]
    assert bisector_by_lemma(*pair) == [(2 + 19) / 2]
    assert bisector_by_lemma(*pair, objects=pair + [third]) is None
    equal = [IV(1, 0, 8), IV(2, 12, 20)]
    assert bisector_by_lemma(*equal, objects=equal + [third]) == [10]


def test_identical_objects_have_no_bisector():
    with pytest.raises(NoBisector):
        bisector_by_lemma(IV(1, 0, 5), IV(2, 0, 5))


def test_initial_bisector_cases():
    assert initial_bisector(IV(1, 0, 10), IV(2, 4, 20)) == [11]
    assert initial_bisector(IV(1, 0, 20), IV(2, 3, 9)) == [1.5, 14.5]
    assert initial_bisector(IV(1, 0, 4), IV(2, 14, 24)) == [(2 + 19) / 2]
    assert initial_bisector(IV(1, 0, 12), IV(2, 10, 14)) == [(6 + 10) / 2]


# -- search -------------------------------------------------------------------

def test_search_returns_seed_when_already_balanced():
    objs = [IV(1, 0, 8), IV(2, 12, 20)]
    assert find_prob_bisector_1d(objs[0], objs[1], 10.0, objs) == 10.0


def test_search_matches_quadrature_crossover():
    # frozen from adaptive quadrature of the pair's distance distributions + root finding
    objs = [IV(1, 0, 10), IV(2, 4, 20)]
    x = find_prob_bisector_1d(objs[0], objs[1], 11.0, objs)
    assert x == pytest.approx(9.358898943546123, abs=0.1)


def test_search_with_interior_third_object():
    # frozen from the same quadrature oracle with the third object included
    objs = [IV(1, 0, 4), IV(2, 10, 20), IV(3, 3, 12)]
    x = find_prob_bisector_1d(objs[0], objs[1], 8.5, objs)
    assert x == pytest.approx(7.3189607581404035, abs=0.1)


def test_equal_lengths_ignore_third_object():
    objs = [IV(1, 0, 8), IV(2, 20, 28), IV(3, 11, 13)]
    bis = prob_bisector_1d(objs[0], objs[1], objs)
    assert [b.position for b in bis] == [14.0]


def test_containment_gives_two_bisectors():
    objs = [IV(1, 0, 20), IV(2, 7, 13)]
    bis = prob_bisector_1d(objs[0], objs[1], objs)
    assert [b.position for b in bis] == [3.5, 16.5]
    assert bis[0].left == 1 and bis[0].right == 2 and bis[1].left == 2 and bis[1].right == 1


def test_off_centre_containment_keeps_only_real_crossovers():
    # far to the left the inner object still wins (0.3 vs 0.7), so only the right crossover exists
    objs = [IV(1, 0, 20), IV(2, 3, 9)]
    bis = prob_bisector_1d(objs[0], objs[1], objs)
    assert len(bis) == 1 and (bis[0].left, bis[0].right) == (2, 1)
    assert pnn_probs(objs, -50.0)[1] == pytest.approx(0.7, abs=1e-3)


def test_ordinary_pair_gives_one_bisector():
    objs = [IV(1, 0, 10), IV(2, 4, 20)]
    assert len(prob_bisector_1d(objs[0], objs[1], objs)) == 1


def test_same_object_rejected():
    with pytest.raises(ValueError):
        prob_bisector_1d(IV(1, 0, 1), IV(1, 0, 1), [])


@given(st.floats(0, 50), st.floats(1, 30), st.floats(0, 50), st.floats(1, 30))
def test_bisector_conditions_hold(l1, n1, l2, n2):
    a, b = IV(1, l1, l1 + n1), IV(2, l2, l2 + n2)
    if abs(l1 - l2) < 1e-6 and abs(n1 - n2) < 1e-6:
        return
    objs = [a, b]
    d = 5 * STEP
    for bis in prob_bisector_1d(a, b, objs):
        p = dict(zip((1, 2), pnn_probs(objs, bis.position)))
        assert abs(p[bis.left] - p[bis.right]) <= EPS
        pl = dict(zip((1, 2), pnn_probs(objs, bis.position - d)))
        pr = dict(zip((1, 2), pnn_probs(objs, bis.position + d)))
        assert pl[bis.left] > pl[bis.right]
        assert pr[bis.left] < pr[bis.right]


# -- heuristic and diagram -----------------------------------------------------

def test_candidate_objects_examples():
    objs = sorted([IV(1, 0, 10), IV(2, 12, 20), IV(3, 11, 30), IV(4, 500, 510)],
                  key=lambda o: o.lower)
    got = candidate_objects(objs, objs[0], 11.0)
    assert {o.id for o in got} == {2, 3}
    cluster = [IV(a, 10 + a, 20 + a) for a in range(5)]
    assert len(candidate_objects(cluster, cluster[0], 15.0)) == 4


@pytest.mark.parametrize("seed", range(3))
def test_heuristic_matches_all_pairs(seed):
    rng = np.random.default_rng(seed)
    objs = _random_intervals(rng, 20, 400.0)
    fast = prob_voronoi_1d(objs)
    full = prob_voronoi_1d(objs, all_pairs=True)
    assert fast.owners == full.owners
    assert np.allclose(fast.positions, full.positions, atol=2 * STEP)


def test_single_object_diagram():
    pvd = prob_voronoi_1d([IV(7, 2, 5)], extent=(0, 100))
    assert pvd.bisectors == () and pvd.cells() == [(0, 100, 7)]


def test_two_equal_objects_diagram():
    pvd = prob_voronoi_1d([IV(1, 0, 8), IV(2, 12, 20)], extent=(0, 20))
    assert pvd.positions == [10] and pvd.owners == [1, 2]


def test_duplicates_removed():
    objs = [IV(1, 0, 8), IV(2, 0, 8), IV(3, 12, 20)]
    assert [o.id for o in dedupe_intervals(objs)] == [1, 3]
    assert prob_voronoi_1d(objs).owners == [1, 3]


@pytest.mark.parametrize("seed", range(3))
def test_cells_agree_with_kernel(seed):
    rng = np.random.default_rng(seed)
    objs = _random_intervals(rng, 50, 3000.0)
    pvd = prob_voronoi_1d(objs)
    pos = pvd.positions
    assert all(b > a for a, b in zip(pos, pos[1:]))
    own = pvd.owners
    assert all(a != b for a, b in zip(own, own[1:]))
    cells = pvd.cells()
    assert cells[0][0] == pvd.extent[0] and cells[-1][1] == pvd.extent[1]
    assert all(c[1] == d[0] for c, d in zip(cells, cells[1:]))
    lo, hi = pvd.extent
    for x in rng.uniform(lo, hi, 300):
        win, gap = _gap_and_winner(objs, x)
        if gap > EPS:
            assert locate_1d(pvd, x) == win


def test_locate_conventions():
    pvd = Pvd1D((Bisector1D(10.0, 1, 2), Bisector1D(20.0, 2, 3)), (0.0, 30.0), 1)
    assert locate_1d(pvd, 3.0) == 1
    assert locate_1d(pvd, 10.0) == 1
    assert locate_1d(pvd, 10.5) == 2
    assert locate_1d(pvd, 30.0) == 3
    with pytest.raises(ValueError):
        locate_1d(pvd, 31.0)


def test_dump_round_trip():
    rng = np.random.default_rng(9)
    pvd = prob_voronoi_1d(_random_intervals(rng, 15, 300.0))
    text = pvd.dumps()
    assert text.splitlines()[1].startswith("bisector ")
    assert Pvd1D.loads(text) == pvd
    with pytest.raises(ValueError, match="line 2"):
        Pvd1D.loads(text.splitlines()[0] + "\nbisector 1.0 2\n")


@pytest.mark.parametrize("offset", [-2.5, -0.7, 0.6, 2.0])
def test_search_finds_edge_of_tie_stretch(offset):
    # an interval centred inside another ties with it beyond the inner one,
    # so each crossover is where the tie gives way to the inner interval
    outer, inner = IV(1, 0, 20), IV(2, 6, 14)
    objs = [outer, inner]
    left_x, right_x = 3.0, 17.0
    assert find_prob_bisector_1d(outer, inner, left_x + offset, objs) == pytest.approx(left_x, abs=STEP)
    assert find_prob_bisector_1d(inner, outer, right_x + offset, objs) == pytest.approx(right_x, abs=STEP)
