"""Moving-query strategies for the most probable nearest neighbour.

A query point walks along a trajectory and, at every vertex, the client
must report the object with the highest nearest-neighbour probability.
The client talks to an in-process :class:`Server`; every round trip is
counted as one communication, and every index node the server touches is
counted as one io.

``naive_pmnn``
    one server-side top-1 evaluation per trajectory vertex.
``ppvd_pmnn``
    the server holds a global diagram; the client buffers the cells and
    bands around its last request and only asks again when it walks out of
    them or lands in a band.
``ipvd_pmnn``
    the client fetches the objects around an anchor point (the known
    region), builds a small local diagram and keeps answering locally while
    one of two safety tests proves that no object outside the region can
    take over.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence, Union

import numpy as np

from .geometry import Mbr, Point2D, UncertainInterval, maxdist, mindist, object_mbr
from .index import IoCounter, MbrTree
from .kernel import (DEFAULT_CONFIG, KernelConfig, ObjectTable, ProbResult, argmax_id,
                     nn_profile, table_probs, topk_pnn)
from .pvd1d import Pvd1D, locate_1d, prob_voronoi_1d
from .pvd2d import InCell, Pvd2D, locate_2d, prob_voronoi_2d

Position = Union[float, Point2D]

RESOLUTIONS = ("cell", "pbr-resolved", "safe-containment", "safe-lowerbound", "refreshed")


# -- result types ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Trajectory:
    """Query positions, one row per vertex (shape ``(n,)`` in 1D, ``(n, 2)`` in 2D)."""

    points: np.ndarray
    step_len: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim not in (1, 2) or len(pts) == 0:
            raise ValueError("a trajectory needs at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return 1 if self.points.ndim == 1 else 2

    def __len__(self) -> int:
        return len(self.points)

    def positions(self) -> list[Position]:
        if self.dim == 1:
            return [float(x) for x in self.points]
        return [Point2D(float(x), float(y)) for x, y in self.points]


@dataclass(frozen=True)
class StepResult:
    position: Position
    winner: Hashable
    resolution: str

    def __post_init__(self):
        if self.resolution not in RESOLUTIONS:
            raise ValueError(f"unknown resolution {self.resolution!r}")


@dataclass
class RunMetrics:
    time_s: float = 0.0
    io: int = 0
    communications: int = 0


@dataclass(frozen=True)
class KnownRegion:
    """Objects fetched around ``anchor``.

    ``objects`` are the top-k most probable nearest neighbours of the anchor
    and ``radius`` is the largest of their maxdists.  ``nearby`` holds every
    other object that reaches into the circle, so nothing outside
    ``objects + nearby`` comes closer than ``radius`` to the anchor.
    ``complete`` is set when the whole database was fetched.
    """

    anchor: Position
    radius: float
    objects: tuple
    nearby: tuple = ()
    complete: bool = False

    @property
    def retrieved(self) -> tuple:
        return self.objects + self.nearby


# -- small helpers -------------------------------------------------------------

def _coords(q: Position) -> tuple[float, float]:
    if isinstance(q, Point2D):
        return q.x, q.y
    if np.ndim(q) == 0:
        return float(q), 0.0
    return float(q[0]), float(q[1])


def _dist(a: Position, b: Position) -> float:
    ax, ay = _coords(a)
    bx, by = _coords(b)
    return math.hypot(ax - bx, ay - by)


def _query_arg(q: Position, dim: int):
    return _coords(q)[0] if dim == 1 else Point2D(*_coords(q))


def winner_and_gap(table: ObjectTable, q: Position, cfg: KernelConfig = DEFAULT_CONFIG
                   ) -> tuple[Hashable, float]:
    """Exhaustive top-1 at ``q`` and its lead over the runner-up."""
    q = _query_arg(q, table.dim)
    probs = table_probs(table, q, cfg, table.candidates(q))
    a = argmax_id(table.ids, probs)
    second = np.partition(probs, -2)[-2] if len(probs) > 1 else 0.0
    return table.ids[a], float(probs[a] - second)


# -- server --------------------------------------------------------------------

class Server:
    """Object store with an MBR index; optionally holds a global diagram."""

    def __init__(self, objects: Sequence, cfg: KernelConfig = DEFAULT_CONFIG,
                 capacity: int = 50):
        if not objects:
            raise ValueError("the server needs at least one object")
        self.objects = list(objects)
        self.cfg = cfg
        self.table = ObjectTable(self.objects)
        self.dim = self.table.dim
        self.tree = MbrTree([(object_mbr(o), a) for a, o in enumerate(self.objects)], capacity)
        self.capacity = capacity
        self.pvd: Optional[Union[Pvd1D, Pvd2D]] = None
        self.pvd_index: Optional[MbrTree] = None

    # ---- diagram ----------------------------------------------------------

    def attach_pvd(self, pvd: Union[Pvd1D, Pvd2D, None] = None) -> None:
        """Install a global diagram (built here when not given) and index its regions."""
        if pvd is None:
            if self.dim == 1:
                pvd = prob_voronoi_1d(self.objects, cfg=self.cfg)
            else:
                pvd = prob_voronoi_2d(self.objects, cfg=self.cfg)
        entries = []
        if isinstance(pvd, Pvd1D):
            for k, (lo, hi, _) in enumerate(pvd.cells()):
                entries.append((Mbr(lo, 0.0, hi, 0.0), ("cell", k)))
        else:
            pvd.materialize()
            for o in pvd.objects:
                box = pvd.pvc_mbr(o.id)
                if box is not None:
                    entries.append((box, ("pvc", o.id)))
            for k in range(len(pvd.edges)):
                box = pvd.band_mbr(k)
                if box is not None:
                    entries.append((box, ("pbr", k)))
        self.pvd = pvd
        self.pvd_index = MbrTree(entries, self.capacity)

    def fetch_regions(self, q: Position, window: float, counter: IoCounter) -> list:
        """Diagram regions whose MBR meets the square of side ``window`` centred at ``q``."""
        if self.pvd_index is None:
            raise RuntimeError("no diagram attached; call attach_pvd first")
        x, y = _coords(q)
        return self.pvd_index.window_query(Mbr.around(x, y, 0.5 * window), counter)

    # ---- top-1 --------------------------------------------------------------

    def _scan_rows(self, q: Position, counter: IoCounter, bound: Optional[float] = None) -> np.ndarray:
        """Rows reached by a mindist scan.

        With ``bound`` the scan returns every row whose box lies closer than
        ``bound``; without it the scan stops once the box distance exceeds
        the smallest maxdist seen, which keeps every row that can have a
        non-zero probability.
        """
        x, y = _coords(q)
        qa = _query_arg(q, self.dim)
        rows = []
        limit = math.inf if bound is None else bound
        for key, row in self.tree.mindist_scan(x, y, counter):
            if key > limit or (bound is not None and key >= bound):
                break
            rows.append(row)
            if bound is None:
                limit = min(limit, float(self.table.maxdist(qa, np.array([row]))[0]))
        return np.array(rows, dtype=int)

    def _top1_rows(self, q: Position, rows: np.ndarray) -> ProbResult:
        qa = _query_arg(q, self.dim)
        rows = np.sort(rows)
        prof = nn_profile(self.table, qa, self.cfg, rows)
        probs = prof.probs
        ids = [self.table.ids[r] for r in prof.rows]
        a = argmax_id(ids, probs)
        return ProbResult(ids[a], float(probs[a]))

    def top1(self, q: Position, counter: IoCounter) -> ProbResult:
        """Most probable nearest neighbour of ``q`` over the whole database."""
        return self._top1_rows(q, self._scan_rows(q, counter))

    def resolve_band(self, q: Position, owners, counter: IoCounter) -> ProbResult:
        """Top-1 over the band owners and every object closer than their largest maxdist."""
        qa = _query_arg(q, self.dim)
        id_rows = {oid: a for a, oid in enumerate(self.table.ids)}
        own = np.array(sorted(id_rows[o] for o in owners), dtype=int)
        bound = float(self.table.maxdist(qa, own).max())
        rows = np.union1d(own, self._scan_rows(q, counter, bound))
        return self._top1_rows(q, rows)

    # ---- known region -------------------------------------------------------

    def known_region(self, q_s: Position, k: int, counter: IoCounter) -> KnownRegion:
        return build_known_region(self, q_s, k, self.cfg, counter)


# -- naive ---------------------------------------------------------------------

def naive_pmnn(traj: Trajectory, server: Server, cfg: Optional[KernelConfig] = None
               ) -> tuple[list[StepResult], RunMetrics]:
    """One server round trip per trajectory vertex."""
    if cfg is not None and cfg != server.cfg:
        raise ValueError("cfg must match the server's kernel configuration")
    counter, metrics = IoCounter(), RunMetrics()
    t0 = time.perf_counter()
    out = []
    for q in traj.positions():
        metrics.communications += 1
        out.append(StepResult(q, server.top1(q, counter).id, "cell"))
    metrics.time_s = time.perf_counter() - t0
    metrics.io = counter.node_accesses
    return out, metrics


# -- pre-computed diagram --------------------------------------------------------

class _Buffer:
    """Client-side copy of the diagram regions fetched last."""

    def __init__(self, pvd):
        self.pvd = pvd
        self.entries: list = []

    def lookup(self, q: Position):
        """``("cell", owner)``, ``("band", owners)`` or ``None`` when not covered."""
        x, y = _coords(q)
        if isinstance(self.pvd, Pvd1D):
            cells = self.pvd.cells()
            for _, k in self.entries:
                lo, hi, owner = cells[k]
                if (lo < x or k == 0) and x <= hi:
                    return "cell", owner
            return None
        owners = set()
        for kind, key in self.entries:
            if kind == "pvc" and self.pvd.in_pvc(key, x, y):
                return "cell", key
        for kind, key in self.entries:
            if kind == "pbr" and self.pvd.in_band(key, x, y):
                owners |= self.pvd.pbr(key).owners
        return ("band", owners) if owners else None


def ppvd_pmnn(traj: Trajectory, server: Server, buffer_window: float,
              cfg: Optional[KernelConfig] = None) -> tuple[list[StepResult], RunMetrics]:
    """Answer from buffered diagram regions; fetch again when they do not settle the step.

    A fetch returns every region whose MBR meets the square window of side
    ``buffer_window`` around the query (``0`` fetches the regions whose MBR
    contains the query).  A query inside a band is settled by the server in
    the same round trip.
    """
    if buffer_window < 0:
        raise ValueError("buffer_window must be >= 0")
    if cfg is not None and cfg != server.cfg:
        raise ValueError("cfg must match the server's kernel configuration")
    if server.pvd is None:
        server.attach_pvd()
    counter, metrics = IoCounter(), RunMetrics()
    buf = _Buffer(server.pvd)
    t0 = time.perf_counter()
    out = []
    for q in traj.positions():
        hit = buf.lookup(q)
        if hit is not None and hit[0] == "cell":
            out.append(StepResult(q, hit[1], "cell"))
            continue
        metrics.communications += 1
        buf.entries = server.fetch_regions(q, buffer_window, counter)
        hit = buf.lookup(q)
        if hit is not None and hit[0] == "cell":
            out.append(StepResult(q, hit[1], "cell"))
        elif hit is not None:
            out.append(StepResult(q, server.resolve_band(q, hit[1], counter).id, "pbr-resolved"))
        else:
            out.append(StepResult(q, server.top1(q, counter).id, "pbr-resolved"))
    metrics.time_s = time.perf_counter() - t0
    metrics.io = counter.node_accesses
    return out, metrics


# -- incremental ---------------------------------------------------------------

def build_known_region(server: Server, q_s: Position, k: int,
                       cfg: Optional[KernelConfig] = None,
                       counter: Optional[IoCounter] = None) -> KnownRegion:
    """Top-k most probable neighbours of ``q_s`` plus everything reaching into their circle."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cfg = cfg or server.cfg
    counter = counter if counter is not None else IoCounter()
    x, y = _coords(q_s)
    qa = _query_arg(q_s, server.dim)
    scan = server.tree.mindist_scan(x, y, counter)
    seen: list[tuple[float, int]] = []

    def feed():
        for key, row in scan:
            seen.append((key, row))
            yield key, server.objects[row]

    top = topk_pnn(feed(), qa, k, cfg)
    by_id = {o.id: o for o in top.retrieved}
    objects = tuple(by_id[i] for i in top.ids)
    radius = max(maxdist(qa, o) for o in objects)
    if not seen or seen[-1][0] < radius:
        for key, row in scan:  # keep scanning until nothing else can reach into the circle
            seen.append((key, row))
            if key >= radius:
                break
    chosen = set(top.ids)
    nearby = tuple(server.objects[row] for key, row in seen
                   if key < radius and server.objects[row].id not in chosen
                   and mindist(qa, server.objects[row]) < radius)
    complete = top.truncated or len(objects) + len(nearby) == len(server.objects)
    return KnownRegion(q_s, float(radius), objects, nearby, complete)


def safe_containment(q: Position, o_i, region: KnownRegion) -> bool:
    """Whether every point of ``o_i`` is closer to ``q`` than anything outside the region.

    Holds iff ``maxdist(q, o_i) <= radius - dist(q, anchor)``, i.e. ``q`` lies
    in the ellipse with foci at the anchor and the object's centre.
    """
    slack = region.radius - _dist(q, region.anchor)
    return slack >= 0 and maxdist(_query_arg(q, _dim_of(o_i)), o_i) <= slack


def safe_lower_bound(q: Position, o_i, region: KnownRegion,
                     cfg: KernelConfig = DEFAULT_CONFIG) -> bool:
    """Whether ``o_i`` stays the most probable neighbour whatever lies outside the region.

    Outside objects are at least ``slack = radius - dist(q, anchor)`` away
    from ``q``.  A zero-extent virtual object placed at exactly that distance
    is the strongest possible outsider: ``o_i`` must beat it, measured with
    the virtual object present.  In addition, ``o_i`` must stay ahead of every
    retrieved object for any way outsiders could thin out the distances
    beyond ``slack``; that holds when the running difference of their
    cumulative probabilities is positive from ``slack`` onward.  Both
    comparisons keep a margin of ``cfg.prob_epsilon``.
    """
    slack = region.radius - _dist(q, region.anchor)
    if slack <= 0:
        return False
    objs = list(region.retrieved)
    ids = [o.id for o in objs]
    if o_i.id not in ids:
        raise ValueError("o_i must be one of the region's objects")
    table = ObjectTable(objs)
    qa = _query_arg(q, table.dim)
    me = ids.index(o_i.id)
    margin = cfg.prob_epsilon

    # the virtual object: a point just outside the region, nearest to q
    qx, qy = _coords(q)
    ax, ay = _coords(region.anchor)
    dx, dy = qx - ax, qy - ay
    norm = math.hypot(dx, dy)
    ux, uy = (dx / norm, dy / norm) if norm > 0 else (1.0, 0.0)
    where = qx + slack * ux if table.dim == 1 else (qx + slack * ux, qy + slack * uy)
    virt = table.with_point(where)
    probs = table_probs(virt, qa, cfg)
    if probs[me] < probs[-1] + margin:
        return False

    prof = nn_profile(table, qa, cfg, extra_nodes=(slack,))
    rows = list(prof.rows)
    if me not in rows:
        return False
    cum = np.cumsum(prof.contrib, axis=1)
    after = prof.nodes[1:] >= slack - 1e-12
    if not after.any():  # everything settled before slack
        after[-1] = True
    mine = cum[rows.index(me), after]
    for a, r in enumerate(rows):
        if r != me and np.min(mine - cum[a, after]) < margin:
            return False
    return True


def _dim_of(o) -> int:
    return 1 if isinstance(o, UncertainInterval) else 2


class _LocalView:
    """The client's copy of a known region with its lazily built local diagram."""

    def __init__(self, region: KnownRegion, cfg: KernelConfig):
        self.region = region
        self.cfg = cfg
        self.objects = list(region.retrieved)
        self.by_id = {o.id: o for o in self.objects}
        self.table = ObjectTable(self.objects)
        self._pvd = None

    def _diagram(self):
        if self._pvd is None:
            ax, ay = _coords(self.region.anchor)
            r = self.region.radius
            if self.table.dim == 1:
                lo = min(ax - r, float(self.table.lo.min()))
                hi = max(ax + r, float(self.table.hi.max()))
                self._pvd = prob_voronoi_1d(self.objects, extent=(lo, hi), cfg=self.cfg)
            else:
                space = Mbr.around(ax, ay, r).union(
                    Mbr.of_points(np.column_stack([self.table.cx, self.table.cy])))
                self._pvd = prob_voronoi_2d(self.objects, space, self.cfg, lazy=True)
        return self._pvd

    def winner(self, q: Position):
        """Local most probable neighbour: from the diagram cell, else by direct evaluation."""
        if len(self.objects) == 1:
            return self.objects[0]
        pvd = self._diagram()
        x, y = _coords(q)
        if isinstance(pvd, Pvd1D):
            if pvd.extent[0] <= x <= pvd.extent[1]:
                return self.by_id[locate_1d(pvd, x)]
        elif pvd.box.contains_point(x, y):
            loc = locate_2d(pvd, Point2D(x, y))
            if isinstance(loc, InCell):
                return self.by_id[loc.object]
        # inside a band, or outside the local diagram (possible for a complete region)
        qa = _query_arg(q, self.table.dim)
        probs = table_probs(self.table, qa, self.cfg)
        return self.objects[argmax_id(self.table.ids, probs)]


def ipvd_pmnn(traj: Trajectory, server: Server, k: int,
              cfg: Optional[KernelConfig] = None) -> tuple[list[StepResult], RunMetrics]:
    """Answer locally while a safety test holds; otherwise fetch a new known region."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if cfg is not None and cfg != server.cfg:
        raise ValueError("cfg must match the server's kernel configuration")
    cfg = server.cfg
    counter, metrics = IoCounter(), RunMetrics()
    view: Optional[_LocalView] = None
    t0 = time.perf_counter()
    out = []
    for q in traj.positions():
        if view is not None and (view.region.complete
                                 or _dist(q, view.region.anchor) < view.region.radius):
            o = view.winner(q)
            if view.region.complete or safe_containment(q, o, view.region):
                out.append(StepResult(q, o.id, "safe-containment"))
                continue
            if safe_lower_bound(q, o, view.region, cfg):
                out.append(StepResult(q, o.id, "safe-lowerbound"))
                continue
        metrics.communications += 1
        view = _LocalView(build_known_region(server, q, k, cfg, counter), cfg)
        out.append(StepResult(q, view.winner(q).id, "refreshed"))
    metrics.time_s = time.perf_counter() - t0
    metrics.io = counter.node_accesses
    return out, metrics
