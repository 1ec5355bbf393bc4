"""Nearest-neighbour probabilities for uncertain objects.

Every object is reduced to the distribution of its distance from the query,
``F_i(d) = P(dist(q, X_i) <= d)``.  The probability that object ``i`` is the
nearest one is then a one-dimensional integral over ``d``::

    p_i = ∫ dF_i(d) · Π_{j≠i} (1 - F_j(d))

which is evaluated shell by shell.  Two evaluation modes exist:

``discrete``
    unit-width shells anchored at integer distances; the survival product is
    taken at the outer radius of each shell.  On integer-aligned data this
    reproduces hand-worked unit sums exactly.
``continuous``
    shells of width ``step`` (plus every kink of every ``F_i``), survival
    averaged at the two Gauss-Legendre points of each shell.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (Point2D, UncertainDisc, UncertainInterval, lens_areas,
                       mindist as _mindist, maxdist as _maxdist)

_GL = 0.5 / math.sqrt(3.0)


@dataclass(frozen=True)
class KernelConfig:
    mode: str = "continuous"
    step: float = 0.25
    prob_epsilon: float = 1e-4

    def __post_init__(self):
        if self.mode not in ("continuous", "discrete"):
            raise ValueError(f"unknown kernel mode {self.mode!r}")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0 < self.prob_epsilon < 1:
            raise ValueError("prob_epsilon must lie in (0, 1)")


DEFAULT_CONFIG = KernelConfig()


@dataclass(frozen=True)
class ProbResult:
    id: Hashable
    prob: float


@dataclass
class TopK:
    """Result of :func:`topk_pnn`; ``retrieved`` is everything pulled from the store."""

    results: list[ProbResult]
    truncated: bool
    retrieved: list = field(default_factory=list)
    next_mindist: float = math.inf

    @property
    def ids(self) -> list:
        return [r.id for r in self.results]


def _loo_prod(x: np.ndarray) -> np.ndarray:
    """Leave-one-out product along axis 0."""
    pre = np.ones_like(x)
    suf = np.ones_like(x)
    if x.shape[0] > 1:
        pre[1:] = np.cumprod(x[:-1], axis=0)
        suf[:-1] = np.cumprod(x[::-1][:-1], axis=0)[::-1]
    return pre * suf


class ObjectTable:
    """Column-oriented view of a homogeneous list of uncertain objects.

    Rows with zero extent (``lo == hi`` or ``r == 0``) are point objects.
    """

    def __init__(self, objects: Sequence, *, _cols=None):
        if _cols is not None:
            self.dim, self.ids, self.objects, cols = _cols
            self._set_cols(cols)
            return
        objects = list(objects)
        self.objects = objects
        self.ids = [o.id for o in objects]
        if objects and isinstance(objects[0], UncertainInterval):
            self.dim = 1
            cols = (np.array([o.lower for o in objects], float),
                    np.array([o.upper for o in objects], float))
        else:
            self.dim = 2
            cols = (np.array([o.center.x for o in objects], float),
                    np.array([o.center.y for o in objects], float),
                    np.array([o.radius for o in objects], float))
        self._set_cols(cols)

    def _set_cols(self, cols):
        self.cols = cols
        if self.dim == 1:
            self.lo, self.hi = cols
            self.is_point = self.lo == self.hi
            self.extent_max = float(np.max(self.hi - self.lo)) if len(self.lo) else 0.0
        else:
            self.cx, self.cy, self.r = cols
            self.is_point = self.r == 0
            self.extent_max = float(np.max(self.r)) if len(self.r) else 0.0
        self._tree = None

    def __len__(self) -> int:
        return len(self.ids)

    def subset(self, idx) -> "ObjectTable":
        idx = np.asarray(idx, dtype=int)
        objs = [self.objects[k] for k in idx] if self.objects is not None else None
        return ObjectTable(None, _cols=(self.dim, [self.ids[k] for k in idx], objs,
                                        tuple(c[idx] for c in self.cols)))

    def with_point(self, where, pid: Hashable = "virtual") -> "ObjectTable":
        """Copy of the table with an extra point object appended."""
        if self.dim == 1:
            x = float(where)
            cols = (np.append(self.lo, x), np.append(self.hi, x))
        else:
            x, y = where
            cols = (np.append(self.cx, x), np.append(self.cy, y), np.append(self.r, 0.0))
        return ObjectTable(None, _cols=(self.dim, self.ids + [pid], None, cols))

    # -- distances --------------------------------------------------------

    def center_dist(self, q, rows=None) -> np.ndarray:
        if self.dim == 1:
            lo, hi = (self.lo, self.hi) if rows is None else (self.lo[rows], self.hi[rows])
            return np.abs(0.5 * (lo + hi) - float(q))
        qx, qy = _xy(q)
        cx, cy = (self.cx, self.cy) if rows is None else (self.cx[rows], self.cy[rows])
        return np.hypot(cx - qx, cy - qy)

    def mindist(self, q, rows=None) -> np.ndarray:
        if self.dim == 1:
            lo, hi = (self.lo, self.hi) if rows is None else (self.lo[rows], self.hi[rows])
            q = float(q)
            return np.maximum(0.0, np.maximum(lo - q, q - hi))
        r = self.r if rows is None else self.r[rows]
        return np.maximum(0.0, self.center_dist(q, rows) - r)

    def maxdist(self, q, rows=None) -> np.ndarray:
        if self.dim == 1:
            lo, hi = (self.lo, self.hi) if rows is None else (self.lo[rows], self.hi[rows])
            q = float(q)
            return np.maximum(np.abs(q - lo), np.abs(q - hi))
        r = self.r if rows is None else self.r[rows]
        return self.center_dist(q, rows) + r

    def candidates(self, q) -> np.ndarray:
        """Row indices that may have non-zero NN probability at ``q`` (a superset)."""
        n = len(self)
        if self.dim == 1 or n <= 48:
            return np.arange(n)
        if self._tree is None:
            self._tree = cKDTree(np.column_stack([self.cx, self.cy]))
        qx, qy = _xy(q)
        kk = min(n, 6)
        dd, ii = self._tree.query((qx, qy), k=kk)
        bound = float(np.min(np.atleast_1d(dd) + self.r[np.atleast_1d(ii)]))
        idx = self._tree.query_ball_point((qx, qy), bound + self.extent_max)
        return np.sort(np.asarray(idx, dtype=int))

    # -- distance distributions ------------------------------------------

    def cdf(self, rows: np.ndarray, q, d: np.ndarray) -> np.ndarray:
        """``F_i(d)`` for the selected rows, shape (len(rows), len(d))."""
        d = np.asarray(d, float)[None, :]
        if self.dim == 1:
            q = float(q)
            lo, hi = self.lo[rows][:, None], self.hi[rows][:, None]
            n = hi - lo
            pt = (n == 0)
            with np.errstate(invalid="ignore", divide="ignore"):
                frac = np.clip(np.minimum(hi, q + d) - np.maximum(lo, q - d), 0.0, None) / n
            if pt.any():
                frac = np.where(pt, (d >= np.abs(lo - q)).astype(float), frac)
            return np.minimum(frac, 1.0)
        cd = self.center_dist(q, rows)[:, None]
        r = self.r[rows][:, None]
        frac = _disc_fraction(cd, r, d)
        pt = (r == 0)
        if pt.any():
            frac = np.where(pt, (d >= cd).astype(float), frac)
        return frac

    def kinks(self, rows: np.ndarray, q) -> np.ndarray:
        if self.dim == 1:
            q = float(q)
            return np.concatenate([np.abs(self.lo[rows] - q), np.abs(self.hi[rows] - q)])
        cd = self.center_dist(q, rows)
        r = self.r[rows]
        return np.concatenate([np.abs(cd - r), cd + r])


def _disc_fraction(D: np.ndarray, R: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Fraction of each disc (column ``D`` centre distance, ``R`` radius) within distance ``a``.

    Same closed form as :func:`geometry.lens_areas`, written without masking
    because the kernel calls it on small dense blocks where per-call overhead
    dominates.
    """
    D2, a2, R2 = D * D, a * a, R * R
    with np.errstate(invalid="ignore", divide="ignore"):
        ca = np.maximum(np.minimum((D2 + a2 - R2) / (2 * D * a), 1.0), -1.0)
        cb = np.maximum(np.minimum((D2 + R2 - a2) / (2 * D * R), 1.0), -1.0)
        k = (a + R - D) * (D + a - R) * (D - a + R) * (D + a + R)
        part = a2 * np.arccos(ca) + R2 * np.arccos(cb) - 0.5 * np.sqrt(np.maximum(k, 0.0))
        area = np.where(D <= np.abs(R - a), np.pi * np.minimum(a2, R2),
                        np.where(D < a + R, part, 0.0))
        frac = area / (np.pi * R2)
    return np.maximum(np.minimum(frac, 1.0), 0.0)


def _xy(q):
    if isinstance(q, Point2D):
        return q.x, q.y
    return float(q[0]), float(q[1])


@dataclass
class Profile:
    """Shell-by-shell decomposition of the NN probabilities at one query point.

    ``contrib[a, k]`` is the mass object ``rows[a]`` collects in shell
    ``[nodes[k], nodes[k+1]]``; row sums are the NN probabilities.
    """

    rows: np.ndarray
    nodes: np.ndarray
    contrib: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return self.contrib.sum(axis=1)


def nn_profile(table: ObjectTable, q, cfg: KernelConfig = DEFAULT_CONFIG,
               rows: Optional[np.ndarray] = None, extra_nodes: Sequence[float] = ()) -> Profile:
    if rows is None:
        rows = np.arange(len(table))
    rows = np.asarray(rows, dtype=int)
    mind = table.mindist(q, rows)
    maxd = table.maxdist(q, rows)
    d_hi = float(maxd.min())
    keep = (mind < d_hi) | (maxd <= d_hi)
    rows, mind = rows[keep], mind[keep]
    d_lo = float(mind.min())
    if len(rows) == 1 and not extra_nodes:
        return Profile(rows, np.array([d_lo, d_hi]), np.ones((1, 1)))
    is_pt = table.is_point[rows]

    if cfg.mode == "discrete":
        k0, k1 = math.floor(d_lo), math.ceil(d_hi)
        nodes = np.arange(k0, max(k1, k0 + 1) + 1, dtype=float)
        Fn = table.cdf(rows, q, nodes)
        contrib = np.diff(Fn, axis=1) * _loo_prod(1.0 - Fn[:, 1:])
        return Profile(rows, nodes, contrib)

    step = cfg.step
    base = np.arange(math.ceil(d_lo / step), math.floor(d_hi / step) + 1) * step
    extra = np.asarray(list(extra_nodes), float)
    pts = np.concatenate([base, table.kinks(rows, q), extra, [d_lo, d_hi]])
    nodes = np.unique(pts[(pts >= d_lo) & (pts <= d_hi)])
    if len(nodes) < 2:
        nodes = np.array([d_lo, d_lo + step])
    h = np.diff(nodes)
    g1 = nodes[:-1] + h * (0.5 - _GL)
    g2 = nodes[:-1] + h * (0.5 + _GL)
    F = table.cdf(rows, q, np.concatenate([nodes, g1, g2]))
    G = len(nodes)
    Fn, F1, F2 = F[:, :G], F[:, G:2 * G - 1], F[:, 2 * G - 1:]
    surv = 0.5 * (_loo_prod(1.0 - F1) + _loo_prod(1.0 - F2))
    contrib = np.diff(Fn, axis=1) * surv
    if is_pt.any():
        at_nodes = _loo_prod(1.0 - Fn)
        for a in np.flatnonzero(is_pt):
            dv = mind[a]
            k = int(np.searchsorted(nodes, dv))
            contrib[a] = 0.0
            contrib[a, max(k, 1) - 1] = at_nodes[a, min(k, G - 1)]
    return Profile(rows, nodes, contrib)


def table_probs(table: ObjectTable, q, cfg: KernelConfig = DEFAULT_CONFIG,
                rows: Optional[np.ndarray] = None) -> np.ndarray:
    """NN probability of every row (zeros outside ``rows`` / pruned rows)."""
    out = np.zeros(len(table))
    if len(table) == 0:
        return out
    prof = nn_profile(table, q, cfg, rows)
    out[prof.rows] = prof.probs
    return out


def argmax_id(ids: Sequence, probs: np.ndarray) -> int:
    """Row index of the highest probability, ties to the smaller id."""
    best = float(np.max(probs))
    tied = np.flatnonzero(probs == best)
    if len(tied) == 1:
        return int(tied[0])
    return int(min(tied, key=lambda a: ids[a]))


def _index_of(objects: Sequence, i: Hashable) -> int:
    for a, o in enumerate(objects):
        if o.id == i:
            return a
    raise KeyError(f"unknown object id {i!r}")


def pnn_probs(objects: Sequence, q, cfg: KernelConfig = DEFAULT_CONFIG) -> np.ndarray:
    """NN probabilities of all objects at ``q``, in input order."""
    return table_probs(ObjectTable(objects), q, cfg)


def pnn_prob_1d(objects: Sequence[UncertainInterval], i: Hashable, q: float,
                cfg: KernelConfig = DEFAULT_CONFIG) -> float:
    a = _index_of(objects, i)
    return float(pnn_probs(objects, float(q), cfg)[a])


def pnn_prob_2d(objects: Sequence[UncertainDisc], i: Hashable, q: Point2D,
                cfg: KernelConfig = DEFAULT_CONFIG) -> float:
    a = _index_of(objects, i)
    return float(pnn_probs(objects, q, cfg)[a])


def top1_pnn(objects: Sequence, q, cfg: KernelConfig = DEFAULT_CONFIG) -> ProbResult:
    if not objects:
        raise ValueError("top1_pnn needs at least one object")
    table = objects if isinstance(objects, ObjectTable) else ObjectTable(objects)
    rows = table.candidates(q)
    probs = table_probs(table, q, cfg, rows)
    a = argmax_id(table.ids, probs)
    return ProbResult(table.ids[a], float(probs[a]))


def rank_key(prob: float, mind: float, oid) -> tuple:
    """Ordering used for top-k: probability, then mindist, then id."""
    return (-prob, mind, oid)


def topk_pnn(store: Iterable, q_s, k: int, cfg: KernelConfig = DEFAULT_CONFIG) -> TopK:
    """Top-k most probable NNs from a source ordered by non-decreasing mindist.

    ``store`` yields objects, or ``(key, object)`` pairs where ``key`` is a
    lower bound on the object's mindist (e.g. an MBR distance).  Objects with
    zero probability are ranked by mindist so that ``k`` may exceed the
    number of objects with non-zero probability.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    retrieved = []
    maxds: list[float] = []  # max-heap (negated) of the k smallest maxdists
    next_key = math.inf
    it = iter(store)
    for item in it:
        key, o = item if isinstance(item, tuple) else (_mindist(q_s, item), item)
        if len(maxds) >= k and key > -maxds[0]:
            next_key = key
            break
        retrieved.append(o)
        md = _maxdist(q_s, o)
        if len(maxds) < k:
            heapq.heappush(maxds, -md)
        elif md < -maxds[0]:
            heapq.heapreplace(maxds, -md)
    if not retrieved:
        return TopK([], True, [], next_key)
    table = ObjectTable(retrieved)
    probs = table_probs(table, q_s, cfg)
    minds = table.mindist(q_s)
    order = sorted(range(len(retrieved)), key=lambda a: rank_key(probs[a], minds[a], table.ids[a]))
    top = [ProbResult(table.ids[a], float(probs[a])) for a in order[:k]]
    return TopK(top, len(retrieved) < k, retrieved, next_key)


def mc_probs(objects: Sequence, q, trials: int, seed: int = 0,
             chunk: int = 200_000) -> np.ndarray:
    """Monte-Carlo NN probabilities: sample every object, count who is nearest."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    table = ObjectTable(objects)
    n = len(table)
    wins = np.zeros(n, dtype=np.int64)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        if table.dim == 1:
            u = rng.random((n, m))
            x = table.lo[:, None] + u * (table.hi - table.lo)[:, None]
            dist = np.abs(x - float(q))
        else:
            qx, qy = _xy(q)
            rad = table.r[:, None] * np.sqrt(rng.random((n, m)))
            th = rng.random((n, m)) * (2 * np.pi)
            dx = table.cx[:, None] + rad * np.cos(th) - qx
            dy = table.cy[:, None] + rad * np.sin(th) - qy
            dist = np.hypot(dx, dy)
        wins += np.bincount(np.argmin(dist, axis=0), minlength=n)
        done += m
    return wins / trials


def mc_oracle(objects: Sequence, i: Hashable, q, trials: int, seed: int = 0) -> float:
    """Unbiased Monte-Carlo estimate of ``p(o_i, q)``."""
    return float(mc_probs(objects, q, trials, seed)[_index_of(objects, i)])
