import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from probvoronoi.geometry import Point2D, UncertainDisc, UncertainInterval, maxdist, mindist
from probvoronoi.kernel import (DEFAULT_CONFIG, KernelConfig, ObjectTable, mc_oracle, mc_probs,
                                pnn_prob_1d, pnn_prob_2d, pnn_probs, top1_pnn, topk_pnn)

DISCRETE = KernelConfig(mode="discrete")
IV, DISC, P = UncertainInterval, UncertainDisc, Point2D


def _random_discs(rng, n, span=60.0):
    return [DISC(a, P(*rng.uniform(0, span, 2)), float(rng.uniform(1, 8))) for a in range(n)]


def _sampled_probs(objects, q, m, seed):
    """Independent sampler: uniform points by rejection from the bounding square."""
    rng = np.random.default_rng(seed)
    dists = []
    for o in objects:
        pts = np.empty((0, 2))
        while len(pts) < m:
            u = rng.uniform(-1, 1, (2 * m, 2))
            pts = np.vstack([pts, u[(u ** 2).sum(1) <= 1]])
        xy = np.array([o.center.x, o.center.y]) + o.radius * pts[:m]
        dists.append(np.hypot(xy[:, 0] - q.x, xy[:, 1] - q.y))
    winner = np.argmin(np.array(dists), axis=0)
    return np.bincount(winner, minlength=len(objects)) / m


def test_config_validation():
    with pytest.raises(ValueError):
        KernelConfig(step=0)
    with pytest.raises(ValueError):
        KernelConfig(prob_epsilon=1.0)
    with pytest.raises(ValueError):
        KernelConfig(mode="exact")


def test_worked_example_discrete_is_fourteen_over_thirty_two():
    objs = [IV(1, -9, -1), IV(2, 3, 7)]
    assert pnn_prob_1d(objs, 1, 0.0, DISCRETE) == 14 / 32
    assert pnn_prob_1d(objs, 2, 0.0, DISCRETE) == 14 / 32


def test_worked_example_continuous_analog():
    # independent quadrature of the same configuration gives exactly 1/2 each
    objs = [IV(1, -9, -1), IV(2, 3, 7)]
    assert pnn_prob_1d(objs, 1, 0.0) == pytest.approx(0.5, abs=1e-9)
    est = mc_oracle(objs, 1, 0.0, trials=200_000, seed=3)
    assert abs(est - 0.5) <= 3 * math.sqrt(0.25 / 200_000)


def test_single_object_has_probability_one():
    assert pnn_prob_1d([IV(1, 3, 9)], 1, -40.0) == 1.0
    assert pnn_prob_2d([DISC(1, P(5, 5), 2)], 1, P(0, 0)) == 1.0
    assert mc_oracle([IV(1, 3, 9)], 1, 0.0, trials=100) == 1.0


def test_equi_range_symmetry():
    objs = [IV(1, 0, 4), IV(2, 10, 14)]
    assert pnn_prob_1d(objs, 1, 7.0) == pytest.approx(0.5, abs=1e-9)
    discs = [DISC(1, P(-5, 0), 3), DISC(2, P(5, 0), 3)]
    p1, p2 = pnn_prob_2d(discs, 1, P(0, 4)), pnn_prob_2d(discs, 2, P(0, 4))
    assert p1 == pytest.approx(p2, abs=1e-12)
    assert p1 == pytest.approx(0.5, abs=1e-4)
    est = mc_oracle(discs, 1, P(0, 4), trials=100_000, seed=1)
    assert abs(est - 0.5) <= 3 * math.sqrt(0.25 / 100_000)


def test_two_disc_value_matches_sampling_oracle():
    # frozen from 4e6 independent rejection samples: 0.761112 (standard error 2.1e-4)
    objs = [DISC(1, P(6, 0), 4), DISC(2, P(-8, 0), 2)]
    assert pnn_prob_2d(objs, 1, P(0, 0)) == pytest.approx(0.761112, abs=2e-3)


def test_unknown_id():
    with pytest.raises(KeyError):
        pnn_prob_1d([IV(1, 0, 1)], 7, 0.0)


def test_zero_probability_prune():
    objs = [IV(1, 0, 2), IV(2, 10, 12)]
    assert pnn_probs(objs, 1.0)[1] == 0.0
    discs = [DISC(1, P(0, 0), 1), DISC(2, P(50, 0), 5)]
    assert pnn_probs(discs, P(0, 0))[1] == 0.0


def test_most_probable_is_not_closest_centre():
    # o2's centre is nearest to q, yet its wide region makes it only second most probable
    q = P(0, 0)
    objs = [DISC(1, P(0, 6), 1), DISC(2, P(5, 0), 8), DISC(3, P(-7, 0), 2)]
    assert q.dist(objs[1].center) < q.dist(objs[0].center) < q.dist(objs[2].center)
    p = pnn_probs(objs, q)
    assert p[0] > p[1] > p[2] > 0
    ref = _sampled_probs(objs, q, 400_000, seed=11)
    assert np.all(np.abs(p - ref) < 4e-3)
    assert top1_pnn(objs, q).id == 1


def test_top1_single_and_empty():
    r = top1_pnn([IV(4, 0, 1)], 10.0)
    assert (r.id, r.prob) == (4, 1.0)
    with pytest.raises(ValueError):
        top1_pnn([], 0.0)


def test_top1_tie_goes_to_smaller_id():
    objs = [DISC(9, P(-5, 0), 3), DISC(2, P(5, 0), 3)]
    assert top1_pnn(objs, P(0, 1)).id == 2


@pytest.mark.parametrize("seed", range(5))
def test_top1_agrees_with_sampling_argmax(seed):
    rng = np.random.default_rng(seed)
    objs = _random_discs(rng, 10, span=40.0)
    q = P(*rng.uniform(10, 30, 2))
    p = pnn_probs(objs, q)
    ref = _sampled_probs(objs, q, 200_000, seed=seed + 100)
    order = np.sort(p)
    if order[-1] - order[-2] > 0.01:
        assert top1_pnn(objs, q).id == int(np.argmax(ref))
    assert np.max(np.abs(p - ref)) < 6e-3


def test_mc_oracle_deterministic_and_validated():
    objs = [IV(1, 0, 5), IV(2, 3, 9)]
    assert mc_oracle(objs, 1, 1.0, 5000, seed=4) == mc_oracle(objs, 1, 1.0, 5000, seed=4)
    with pytest.raises(ValueError):
        mc_probs(objs, 1.0, 0)


def test_topk_single_object():
    top = topk_pnn([DISC(1, P(0, 0), 1)], P(3, 3), 1)
    assert top.ids == [1] and not top.truncated


def test_topk_truncates_small_database():
    top = topk_pnn([IV(1, 0, 1), IV(2, 4, 5)], 0.0, 5)
    assert top.truncated and set(top.ids) == {1, 2}


def test_topk_known_region_layout():
    q_s = P(0, 0)
    objs = [DISC(1, P(3, 0), 1.5), DISC(2, P(-2, 2), 1), DISC(3, P(0, -4), 2),
            DISC(4, P(12, 5), 2), DISC(5, P(-14, -3), 3), DISC(6, P(10, -10), 2),
            DISC(7, P(-9, 11), 1)]
    store = sorted(objs, key=lambda o: mindist(q_s, o))
    assert set(topk_pnn(store, q_s, 3).ids) == {1, 2, 3}


@pytest.mark.parametrize("seed", range(6))
def test_topk_matches_exhaustive_ranking(seed):
    rng = np.random.default_rng(seed)
    objs = _random_discs(rng, 20)
    q = P(*rng.uniform(0, 60, 2))
    store = sorted(objs, key=lambda o: mindist(q, o))
    p = pnn_probs(objs, q)
    ranked = sorted(range(20), key=lambda a: (-p[a], mindist(q, objs[a]), objs[a].id))
    for k in (1, 2, 5):
        top = topk_pnn(store, q, k)
        assert top.ids == [objs[a].id for a in ranked[:k]]
        # the stop rule never needs objects beyond the k-th smallest maxdist
        kth = sorted(maxdist(q, o) for o in top.retrieved)[min(k, len(top.retrieved)) - 1]
        assert top.next_mindist >= kth


def test_topk_rejects_bad_k():
    with pytest.raises(ValueError):
        topk_pnn([IV(1, 0, 1)], 0.0, 0)


def test_candidates_superset_of_nonzero_rows():
    rng = np.random.default_rng(7)
    objs = _random_discs(rng, 300, span=500.0)
    table = ObjectTable(objs)
    for _ in range(20):
        q = P(*rng.uniform(0, 500, 2))
        full = pnn_probs(objs, q)
        cand = set(table.candidates(q).tolist())
        assert set(np.flatnonzero(full).tolist()) <= cand


@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0.5, 20)), min_size=1, max_size=12),
       st.floats(-20, 140))
def test_probabilities_sum_to_one_1d(spans, q):
    objs = [IV(a, lo, lo + n) for a, (lo, n) in enumerate(spans)]
    p = pnn_probs(objs, q)
    assert np.all(p >= 0) and np.all(p <= 1 + 1e-12)
    assert abs(p.sum() - 1) <= 5 * DEFAULT_CONFIG.step / min(n for _, n in spans)


@given(st.integers(0, 100_000), st.integers(1, 12))
def test_probabilities_sum_to_one_2d(seed, n):
    rng = np.random.default_rng(seed)
    objs = _random_discs(rng, n, span=30.0)
    q = P(*rng.uniform(0, 30, 2))
    p = pnn_probs(objs, q)
    assert abs(p.sum() - 1) <= 5 * DEFAULT_CONFIG.step / min(o.radius for o in objs)


@given(st.integers(0, 100_000))
def test_zero_probability_exactly_when_beyond_min_maxdist(seed):
    rng = np.random.default_rng(seed)
    objs = _random_discs(rng, 8, span=40.0)
    q = P(*rng.uniform(0, 40, 2))
    p = pnn_probs(objs, q)
    bound = min(maxdist(q, o) for o in objs)
    for o, pi in zip(objs, p):
        if mindist(q, o) >= bound:
            assert pi == 0.0


def test_step_refinement_converges():
    objs = [DISC(1, P(6, 0), 4), DISC(2, P(-5, 1), 3), DISC(3, P(1, 7), 2.5)]
    q = P(0.3, 0.2)
    vals = [pnn_prob_2d(objs, 1, q, KernelConfig(step=s)) for s in (1.0, 0.5, 0.25, 0.125)]
    changes = np.abs(np.diff(vals))
    assert changes[-1] <= changes[0] + 1e-12
    assert changes[-1] < 1e-4


def test_argmax_invariant_to_step_when_gap_is_large():
    rng = np.random.default_rng(5)
    for _ in range(10):
        objs = _random_discs(rng, 6, span=25.0)
        q = P(*rng.uniform(0, 25, 2))
        p = np.sort(pnn_probs(objs, q))
        if p[-1] - p[-2] > 0.01:
            assert top1_pnn(objs, q).id == top1_pnn(objs, q, KernelConfig(step=0.05)).id
