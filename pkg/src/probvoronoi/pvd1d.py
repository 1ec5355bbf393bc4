"""Probabilistic Voronoi diagrams of uncertain intervals on a line.

A probabilistic bisector of two intervals is a position where both are
equally likely to be the nearest neighbour, with one of them winning just
to its left and the other just to its right.  Closed forms exist for a
handful of pair shapes; everything else is found by a bracketing search on
the kernel.  The diagram is assembled by sweeping the sorted bisectors from
left to right and keeping those that hand the cell over from the current
owner.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Optional, Sequence

import numpy as np

from .geometry import LENGTH_TOL, UncertainInterval
from .kernel import DEFAULT_CONFIG, KernelConfig, ObjectTable, argmax_id, table_probs


class NoBisector(ValueError):
    """Raised for a pair of identical intervals."""


class BisectorSearchError(RuntimeError):
    """The bracketing search found no ranking swap inside the legal range."""


@dataclass(frozen=True)
class Bisector1D:
    position: float
    left: Hashable
    right: Hashable


@dataclass(frozen=True)
class Pvd1D:
    bisectors: tuple[Bisector1D, ...]
    extent: tuple[float, float]
    first: Hashable

    @property
    def positions(self) -> list[float]:
        return [b.position for b in self.bisectors]

    @property
    def owners(self) -> list:
        return [self.first] + [b.right for b in self.bisectors]

    def cells(self) -> list[tuple[float, float, Hashable]]:
        edges = [self.extent[0]] + self.positions + [self.extent[1]]
        return [(edges[k], edges[k + 1], o) for k, o in enumerate(self.owners)]

    def dumps(self) -> str:
        lines = [f"# pvd1d extent={float(self.extent[0])!r},{float(self.extent[1])!r} first={self.first}"]
        lines += [f"bisector {float(b.position)!r} {b.left} {b.right}" for b in self.bisectors]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, id_type=int) -> "Pvd1D":
        bis, extent, first = [], None, None
        for ln, line in enumerate(text.splitlines(), 1):
            if line.startswith("# pvd1d"):
                fields = dict(kv.split("=", 1) for kv in line.split()[2:])
                lo, hi = fields["extent"].split(",")
                extent, first = (float(lo), float(hi)), id_type(fields["first"])
            elif line.strip():
                parts = line.split()
                if len(parts) != 4 or parts[0] != "bisector":
                    raise ValueError(f"line {ln}: malformed bisector line {line!r}")
                bis.append(Bisector1D(float(parts[1]), id_type(parts[2]), id_type(parts[3])))
        if extent is None:
            raise ValueError("missing pvd1d header")
        return cls(tuple(bis), extent, first)


def locate_1d(pvd: Pvd1D, q: float) -> Hashable:
    """Owner of the cell containing ``q``; a point on a bisector goes to the left cell."""
    lo, hi = pvd.extent
    if not lo <= q <= hi:
        raise ValueError(f"query {q} outside extent [{lo}, {hi}]")
    return pvd.owners[bisect.bisect_left(pvd.positions, q)]


# -- closed forms ----------------------------------------------------------

def _same(a: float, b: float) -> bool:
    return abs(a - b) <= LENGTH_TOL


def _interferes(oi, oj, objects: Optional[Iterable]) -> bool:
    if objects is None:
        return False
    lo, hi = min(oi.lower, oj.lower), max(oi.upper, oj.upper)
    return any(o.id not in (oi.id, oj.id) and o.lower < hi and o.upper > lo for o in objects)


def _closed_form_shape(oi: UncertainInterval, oj: UncertainInterval) -> Optional[list[Bisector1D]]:
    """Closed-form bisectors for the special pair shapes, ignoring third objects."""
    if _same(oi.lower, oj.lower) and _same(oi.upper, oj.upper):
        raise NoBisector(f"objects {oi.id!r} and {oj.id!r} are identical")
    a, b = (oi, oj) if (oi.mid, oi.lower) <= (oj.mid, oj.lower) else (oj, oi)
    if _same(a.length, b.length):
        return [Bisector1D(0.5 * (a.mid + b.mid), a.id, b.id)]
    if a.upper < b.lower:
        return [Bisector1D(0.5 * (a.mid + b.mid), a.id, b.id)]
    outer, inner = (oi, oj) if oi.length > oj.length else (oj, oi)
    if _same(outer.lower, inner.lower):
        return [Bisector1D(0.5 * (outer.mid + inner.upper), inner.id, outer.id)]
    if _same(outer.upper, inner.upper):
        return [Bisector1D(0.5 * (outer.mid + inner.lower), outer.id, inner.id)]
    if _same(outer.mid, inner.mid):
        return [Bisector1D(0.5 * (outer.lower + inner.lower), outer.id, inner.id),
                Bisector1D(0.5 * (outer.upper + inner.upper), inner.id, outer.id)]
    return None


def _closed_form_bisectors(oi, oj, objects=None) -> Optional[list[Bisector1D]]:
    shape = _closed_form_shape(oi, oj)
    if shape is None:
        return None
    if _same(oi.length, oj.length) or not _interferes(oi, oj, objects):
        return shape
    return None


def bisector_by_lemma(oi: UncertainInterval, oj: UncertainInterval,
                      objects: Optional[Sequence[UncertainInterval]] = None) -> Optional[list[float]]:
    """Closed-form bisector positions, or ``None`` when no closed form applies.

    Equal-length pairs are solved regardless of ``objects``; the other shapes
    need the span of the pair to be free of third objects.
    """
    if oi.id == oj.id:
        raise ValueError("a bisector needs two distinct objects")
    found = _closed_form_bisectors(oi, oj, objects)
    return None if found is None else [b.position for b in found]


def _seeds(oi: UncertainInterval, oj: UncertainInterval) -> list[tuple[float, Hashable, Hashable]]:
    """Start points for the search, each with the expected (left, right) winners."""
    shape = _closed_form_shape(oi, oj)
    if shape is not None:
        return [(b.position, b.left, b.right) for b in shape]
    a, b = (oi, oj) if (oi.lower, -oi.upper) <= (oj.lower, -oj.upper) else (oj, oi)
    if b.upper < a.upper:  # containment: a holds b
        return [(0.5 * (a.lower + b.lower), a.id, b.id), (0.5 * (a.upper + b.upper), b.id, a.id)]
    if b.lower - a.lower < b.upper - a.upper:
        return [(0.5 * (b.mid + a.upper), a.id, b.id)]
    return [(0.5 * (a.mid + b.lower), a.id, b.id)]


def initial_bisector(oi: UncertainInterval, oj: UncertainInterval) -> list[float]:
    """Seed position(s) for the bisector search, from the most similar closed-form shape."""
    return [s[0] for s in _seeds(oi, oj)]


# -- search ----------------------------------------------------------------

class _PairProbe:
    def __init__(self, table: ObjectTable, a: int, b: int, cfg: KernelConfig):
        self.table, self.a, self.b, self.cfg = table, a, b, cfg

    def __call__(self, x: float) -> tuple[float, float]:
        p = table_probs(self.table, x, self.cfg)
        return p[self.a] - p[self.b], p[self.a] + p[self.b]


def _legal_range(oi, oj) -> tuple[float, float]:
    pad = max(oi.length, oj.length)
    return min(oi.lower, oj.lower) - pad, max(oi.upper, oj.upper) + pad


def _bisect(f: _PairProbe, lo: float, hi: float, cfg: KernelConfig,
            on_left: Optional[Callable[[float], bool]] = None) -> float:
    """Shrink a bracket whose ends lie on opposite sides of a crossover.

    ``on_left(f_value)`` tells whether a point belongs to the left side; by
    default the left side is where the left object is ahead.
    """
    on_left = on_left or (lambda v: v > 0)
    mid = 0.5 * (lo + hi)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        fm, _ = f(mid)
        if hi - lo <= cfg.step and abs(fm) <= cfg.prob_epsilon:
            return mid
        if on_left(fm):
            lo = mid
        else:
            hi = mid
    return mid


def _scan(f: _PairProbe, lo: float, hi: float, near: float, cfg: KernelConfig) -> Optional[float]:
    h = max(cfg.step, 1.0)
    xs = np.arange(lo, hi + h, h)
    vals = [f(x) for x in xs]
    best = None
    for k in range(len(xs) - 1):
        (f0, s0), (f1, s1) = vals[k], vals[k + 1]
        if f0 > 0 >= f1 and max(s0, s1) > cfg.prob_epsilon:
            if best is None or abs(xs[k] - near) < abs(best[0] - near):
                best = (xs[k], xs[k + 1])
    if best is None:
        return None
    return _bisect(f, best[0], best[1], cfg)


def _walk(f: _PairProbe, start: float, direction: float, stop: Callable[[float], bool],
          bounds: tuple[float, float], cfg: KernelConfig):
    """Stride 1, 2, 4, ... units from ``start`` until ``stop(f)`` holds.

    Returns ``("hit", prev, x)`` with the last two probed points,
    ``("dead", prev, x)`` when both objects lost all probability or the data
    ran out first.
    """
    lo, hi = bounds
    prev, stride = start, 1.0
    while True:
        x = min(max(prev + direction * stride, lo), hi)
        fx, sx = f(x)
        if sx > cfg.prob_epsilon and stop(fx):
            return "hit", prev, x
        if sx <= cfg.prob_epsilon or x in (lo, hi):
            return "dead", prev, x
        prev, stride = x, 2 * stride


def _find(oi, oj, ipb: float, table: ObjectTable, rows: dict, cfg: KernelConfig) -> float:
    eps = cfg.prob_epsilon
    f = _PairProbe(table, rows[oi.id], rows[oj.id], cfg)
    f0, s0 = f(ipb)
    if s0 <= eps:
        lo, hi = _legal_range(oi, oj)
        x = _scan(f, lo, hi, ipb, cfg)
        if x is None:
            raise BisectorSearchError(f"no swap between {oi.id!r} and {oj.id!r}")
        return x
    # third objects can push the crossover well outside the pair's span, so the
    # walk continues until both objects lose all probability or data runs out
    bounds = (float(np.min(table.lo)) - table.extent_max, float(np.max(table.hi)) + table.extent_max)
    if abs(f0) <= eps:
        # Already balanced.  The pair may be tied on a whole stretch (an interval
        # centred inside another ties with it beyond the inner one); the
        # crossover is then where the tie gives way to a strict winner, taken on
        # the side the ordering expects: oj ahead to the right, oi to the left.
        if f(ipb - cfg.step)[0] > eps or f(ipb + cfg.step)[0] < -eps:
            return ipb
        ends = []
        how, a, b = _walk(f, ipb, 1.0, lambda v: v < -eps, bounds, cfg)
        if how == "hit":
            ends.append((b - ipb, a, b, lambda v: v >= -eps))
        how, b, a = _walk(f, ipb, -1.0, lambda v: v > eps, bounds, cfg)
        if how == "hit":
            ends.append((ipb - a, a, b, lambda v: v > eps))
        if not ends:
            return ipb
        _, a, b, on_left = min(ends, key=lambda e: e[0])
        return _bisect(f, a, b, cfg, on_left)
    if f0 > 0:  # oi ahead: move right until oi is no longer strictly ahead
        how, a, b = _walk(f, ipb, 1.0, lambda v: v <= eps, bounds, cfg)
        on_left = lambda v: v > eps
    else:  # oj ahead: move left until oj is no longer strictly ahead
        how, b, a = _walk(f, ipb, -1.0, lambda v: v >= -eps, bounds, cfg)
        on_left = lambda v: v >= -eps
    if how == "hit":
        return _bisect(f, a, b, cfg, on_left)
    found = _scan(f, a, b, ipb, cfg)
    if found is None:
        raise BisectorSearchError(f"no swap between {oi.id!r} and {oj.id!r}")
    return found


def find_prob_bisector_1d(oi: UncertainInterval, oj: UncertainInterval, ipb: float,
                          objects: Sequence[UncertainInterval],
                          cfg: KernelConfig = DEFAULT_CONFIG) -> float:
    """Locate the probability crossover of ``oi`` (winning on the left) and ``oj``.

    Starts at ``ipb``, strides outward 1, 2, 4, ... units toward the side the
    deficit points to until the pair ranking swaps, then bisects.
    """
    table = ObjectTable(objects)
    rows = {oid: a for a, oid in enumerate(table.ids)}
    return _find(oi, oj, ipb, table, rows, cfg)


def _pair_bisectors(oi, oj, objects, table, rows, cfg) -> list[Bisector1D]:
    found = _closed_form_bisectors(oi, oj, objects)
    if found is not None:
        return found
    by_id = {oi.id: oi, oj.id: oj}
    out = []
    seeds = _seeds(oi, oj)
    for x0, left, right in seeds:
        try:
            x = _find(by_id[left], by_id[right], x0, table, rows, cfg)
        except BisectorSearchError:
            if len(seeds) == 1:
                raise
            continue
        out.append(Bisector1D(x, left, right))
    return out


def prob_bisector_1d(oi: UncertainInterval, oj: UncertainInterval,
                     objects: Sequence[UncertainInterval],
                     cfg: KernelConfig = DEFAULT_CONFIG) -> list[Bisector1D]:
    if oi.id == oj.id:
        raise ValueError("a bisector needs two distinct objects")
    table = ObjectTable(objects)
    rows = {oid: a for a, oid in enumerate(table.ids)}
    return _pair_bisectors(oi, oj, objects, table, rows, cfg)


def candidate_objects(sorted_objects: Sequence[UncertainInterval], oi: UncertainInterval,
                      pb: float) -> list[UncertainInterval]:
    """Objects whose lower bound is at least as close to ``pb`` as ``oi``'s lower bound."""
    d = abs(pb - oi.lower)
    return [o for o in sorted_objects if o.id != oi.id and abs(pb - o.lower) <= d]


def dedupe_intervals(objects: Iterable[UncertainInterval]) -> list[UncertainInterval]:
    seen, out = set(), []
    for o in sorted(objects, key=lambda o: (o.lower, o.upper, o.id)):
        key = (o.lower, o.upper)
        if key not in seen:
            seen.add(key)
            out.append(o)
    return out


def prob_voronoi_1d(objects: Sequence[UncertainInterval],
                    extent: Optional[tuple[float, float]] = None,
                    cfg: KernelConfig = DEFAULT_CONFIG,
                    all_pairs: bool = False) -> Pvd1D:
    """Build the diagram over ``extent`` (defaults to the span of the objects).

    ``all_pairs`` computes every pairwise bisector instead of the pruned
    candidate set; it exists as a reference for testing the pruning.
    """
    objs = dedupe_intervals(objects)
    if not objs:
        raise ValueError("prob_voronoi_1d needs at least one object")
    if extent is None:
        extent = (min(o.lower for o in objs), max(o.upper for o in objs))
    table = ObjectTable(objs)
    rows = {oid: a for a, oid in enumerate(table.ids)}

    pairs: set[tuple[int, int]] = set()
    for s, oi in enumerate(objs):
        if all_pairs:
            pairs.update((s, t) for t in range(s + 1, len(objs)))
            continue
        if s + 1 == len(objs):
            continue
        pairs.add((s, s + 1))
        try:
            found = _pair_bisectors(oi, objs[s + 1], objs, table, rows, cfg)
        except BisectorSearchError:
            found = []
        for b in found:
            for ok in candidate_objects(objs, oi, b.position):
                t = rows[ok.id]
                pairs.add((min(s, t), max(s, t)))

    cache: dict[tuple[int, int], list[Bisector1D]] = {}
    for s, t in sorted(pairs):
        try:
            cache[(s, t)] = _pair_bisectors(objs[s], objs[t], objs, table, rows, cfg)
        except BisectorSearchError:
            cache[(s, t)] = []

    lo, hi = extent
    cands = sorted((b for bs in cache.values() for b in bs if lo < b.position < hi),
                   key=lambda b: (b.position, str(b.left), str(b.right)))
    first = table.ids[argmax_id(table.ids, table_probs(table, lo, cfg))]
    kept = _sweep(cands, lo, first, cfg.step)
    kept = _repair(kept, cands, table, (lo, hi), first, cfg)
    return Pvd1D(tuple(kept), (float(lo), float(hi)), first)


def _sweep(cands: list[Bisector1D], start: float, owner, step: float) -> list[Bisector1D]:
    """Keep the bisectors (after ``start``) that hand the cell over from the current owner."""
    kept: list[Bisector1D] = []
    skipped: list[Bisector1D] = []
    for b in cands:
        if b.position <= start:
            continue
        if b.left != owner:
            skipped.append(b)
            continue
        kept.append(b)
        owner = b.right
        # a bisector just behind this one may hand over from the new owner
        # when three crossovers fall within one integration step
        while True:
            late = [s for s in skipped if s.left == owner and s.position >= b.position - step]
            if not late:
                break
            nxt = late[0]
            skipped.remove(nxt)
            kept.append(Bisector1D(kept[-1].position, nxt.left, nxt.right))
            owner = nxt.right
        skipped = [s for s in skipped if s.position >= b.position - step]
    return _collapse(kept)


def _winner(table: ObjectTable, x: float, cfg: KernelConfig):
    p = table_probs(table, x, cfg)
    a = argmax_id(table.ids, p)
    return table.ids[a], p


def _repair(kept: list[Bisector1D], cands: list[Bisector1D], table: ObjectTable,
            extent: tuple[float, float], first, cfg: KernelConfig) -> list[Bisector1D]:
    """Probe every cell and splice in handovers the candidate pairs missed.

    The pruned pair set can miss a handover, e.g. when a contained interval
    returns its cell to the enclosing one.  A probe whose winner disagrees
    with the cell owner brackets the missed handover; it is located by
    bisection on "the owner still wins", and the sweep restarts from there.
    """
    lo_ext, hi_ext = extent
    rows = {oid: a for a, oid in enumerate(table.ids)}
    start = 0  # cells before this index are verified
    for _ in range(4 * len(table) + 16):
        owners = [first] + [b.right for b in kept]
        edges = [lo_ext] + [b.position for b in kept] + [hi_ext]
        bad = None
        for c in range(start, len(owners)):
            a, b = edges[c], edges[c + 1]
            for frac in (0.5, 0.15, 0.85):
                x = a + frac * (b - a)
                w, p = _winner(table, x, cfg)
                if w != owners[c] and p[rows[w]] - p[rows[owners[c]]] > cfg.prob_epsilon:
                    bad = (c, x)
                    break
            if bad:
                break
        if bad is None:
            return kept
        c, x_bad = bad
        owner = owners[c]
        left = edges[c]
        # owner wins at `left` (by construction), loses at x_bad
        a, b = left, x_bad
        while b - a > cfg.step / 8:
            m = 0.5 * (a + b)
            if _winner(table, m, cfg)[0] == owner:
                a = m
            else:
                b = m
        succ = _winner(table, b, cfg)[0]
        if succ == owner:
            succ = _winner(table, x_bad, cfg)[0]
        f = _PairProbe(table, rows[owner], rows[succ], cfg)
        fa, _ = f(a)
        fb, _ = f(b)
        t = _bisect(f, a, b, cfg) if fa > 0 >= fb else 0.5 * (a + b)
        prefix = kept[:c]
        if prefix and t <= prefix[-1].position:
            t = np.nextafter(prefix[-1].position, np.inf)
        kept = _collapse(prefix + [Bisector1D(float(t), owner, succ)] + _sweep(cands, t, succ, cfg.step))
        start = max(c, 0)
    return kept


def _collapse(kept: list[Bisector1D]) -> list[Bisector1D]:
    """Merge bisectors sharing a position so positions strictly increase."""
    out: list[Bisector1D] = []
    for b in kept:
        if out and b.position <= out[-1].position:
            prev = out.pop()
            if prev.left != b.right:
                out.append(Bisector1D(prev.position, prev.left, b.right))
        else:
            out.append(b)
    return out
