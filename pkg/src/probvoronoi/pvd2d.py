"""Probabilistic Voronoi diagrams of uncertain discs in the plane.

The construction starts from the ordinary Voronoi diagram of the disc
centres.  Each Voronoi edge separates two objects; where both have the same
radius the probabilistic bisector coincides with the edge.  Otherwise the
true bisector is a curve near the edge and is enclosed in a band parallel
to it: the band's signed offsets ``lval <= 0 <= hval`` are measured along
the edge normal, negative toward the first object's centre.

The probabilistic cell of an object is its Voronoi cell minus the bands of
its edges.  A query inside a cell is answered without any probability
evaluation; a query inside one or more bands needs a top-1 evaluation over
the band owners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import QhullError, Voronoi, cKDTree

from .geometry import LENGTH_TOL, Mbr, Point2D, Segment2D, UncertainDisc
from .kernel import DEFAULT_CONFIG, KernelConfig, ObjectTable, nn_profile

#: Fraction by which the data space is inflated before clipping edges.
BOX_MARGIN = 0.05
#: Samples along an edge when searching for the part a third object influences.
INFLUENCE_SAMPLES = 64
#: Samples along a perpendicular when scanning overlapping pairs.
SCAN_SAMPLES = 41


# -- result types ------------------------------------------------------------

@dataclass(frozen=True)
class VoronoiEdge:
    i: Hashable
    j: Hashable
    segment: Segment2D


@dataclass(frozen=True)
class Pbr:
    """Band around the probabilistic bisector of ``i`` and ``j``."""

    i: Hashable
    j: Hashable
    edge: VoronoiEdge
    lval: float
    hval: float
    origin: tuple[float, float]  # a point on the centre bisector
    normal: tuple[float, float]  # unit vector from c_i toward c_j
    flagged: bool = False

    @property
    def quad(self) -> tuple[Point2D, Point2D, Point2D, Point2D]:
        a, b = self.edge.segment.a, self.edge.segment.b
        nx, ny = self.normal
        return (Point2D(a.x + self.lval * nx, a.y + self.lval * ny),
                Point2D(b.x + self.lval * nx, b.y + self.lval * ny),
                Point2D(b.x + self.hval * nx, b.y + self.hval * ny),
                Point2D(a.x + self.hval * nx, a.y + self.hval * ny))

    def offset(self, x: float, y: float) -> float:
        return (x - self.origin[0]) * self.normal[0] + (y - self.origin[1]) * self.normal[1]

    @property
    def owners(self) -> frozenset:
        return frozenset((self.i, self.j))


@dataclass(frozen=True)
class InCell:
    object: Hashable


@dataclass(frozen=True)
class InPbr:
    pair: tuple[Hashable, Hashable]
    pbr: int


@dataclass(frozen=True)
class InMultiPbr:
    objects: frozenset
    pbrs: tuple[int, ...]


Location = Union[InCell, InPbr, InMultiPbr]


class Pvd2D:
    """The diagram: Voronoi cells of the centres, one band per edge, shrunk cells.

    With ``lazy=True`` bands are computed the first time a query needs them,
    which is how the incremental strategy uses small throw-away diagrams.
    """

    def __init__(self, objects: Sequence[UncertainDisc], space: Mbr,
                 cfg: KernelConfig = DEFAULT_CONFIG, dropped: Optional[dict] = None,
                 lazy: bool = False):
        self.objects = list(objects)
        self.space = space
        self.cfg = cfg
        self.dropped = dict(dropped or {})
        self._layout = _Layout(self.objects, space)
        self._ctx = _Context(self.objects, cfg)
        self.box = self._layout.box
        self._ids = self._layout.ids
        self._tree = cKDTree(self._layout.centres)
        self.edges: list[VoronoiEdge] = []
        self.incident: dict = {oid: [] for oid in self._ids}
        self._edge_rows: list[tuple[int, int]] = []
        for a, b, seg in self._layout.edges:
            self.incident[self._ids[a]].append(len(self.edges))
            self.incident[self._ids[b]].append(len(self.edges))
            self.edges.append(VoronoiEdge(self._ids[a], self._ids[b], seg))
            self._edge_rows.append((a, b))
        self.cells = {oid: self._layout.cells[a] for a, oid in enumerate(self._ids)}
        self._pbrs: list[Optional[Pbr]] = [None] * len(self.edges)
        self._pvcs: dict = {}
        self._bands: dict = {}
        if not lazy:
            self.materialize()

    def materialize(self) -> "Pvd2D":
        for k in range(len(self.edges)):
            self.pbr(k)
        for oid in self._ids:
            self.pvc(oid)
        return self

    def pbr(self, k: int) -> Pbr:
        pb = self._pbrs[k]
        if pb is None:
            a, b = self._edge_rows[k]
            lay = self._layout
            pb = prob_bisector_2d(self.objects[a], self.objects[b], self.edges[k], self.objects,
                                  self.cfg, self._ctx, _cells=(lay.halfplanes[a], lay.halfplanes[b]))
            self._pbrs[k] = pb
        return pb

    @property
    def pbrs(self) -> list[Pbr]:
        return [self.pbr(k) for k in range(len(self.edges))]

    def pvc(self, oid) -> np.ndarray:
        poly = self._pvcs.get(oid)
        if poly is None:
            poly = self.cells[oid]
            for k in self.incident[oid]:
                pb = self.pbr(k)
                n = np.array(pb.normal)
                base = float(n @ np.array(pb.origin))
                if pb.i == oid:  # keep offset <= lval
                    poly = clip_halfplane(poly, n, base + pb.lval)
                else:  # keep offset >= hval
                    poly = clip_halfplane(poly, -n, -(base + pb.hval))
            self._pvcs[oid] = poly
        return poly

    @property
    def pvcs(self) -> dict:
        return {oid: self.pvc(oid) for oid in self._ids}

    def band_polys(self, k: int) -> list[np.ndarray]:
        """Parts of the two Voronoi cells that the band takes away from their cells."""
        polys = self._bands.get(k)
        if polys is None:
            pb = self.pbr(k)
            n = np.array(pb.normal)
            base = float(n @ np.array(pb.origin))
            polys = [clip_halfplane(self.cells[pb.i], -n, -(base + pb.lval)),
                     clip_halfplane(self.cells[pb.j], n, base + pb.hval)]
            self._bands[k] = polys
        return polys

    def band_hit(self, k: int, oid, x: float, y: float) -> bool:
        """Whether ``(x, y)``, known to lie in ``oid``'s Voronoi cell, falls in band ``k``."""
        pb = self.pbr(k)
        o = pb.offset(x, y)
        return o >= pb.lval if oid == pb.i else o <= pb.hval

    def nearest_site(self, x: float, y: float) -> Hashable:
        _, a = self._tree.query((x, y))
        return self._ids[int(a)]

    def pvc_mbr(self, oid) -> Optional[Mbr]:
        poly = self.pvc(oid)
        return Mbr.of_points(poly) if len(poly) else None

    def band_mbr(self, k: int) -> Optional[Mbr]:
        polys = [p for p in self.band_polys(k) if len(p)]
        return Mbr.of_points(np.vstack(polys)) if polys else None

    def in_band(self, k: int, x: float, y: float) -> bool:
        return any(len(p) and point_in_convex(p, x, y) for p in self.band_polys(k))

    def in_pvc(self, oid, x: float, y: float) -> bool:
        poly = self.pvc(oid)
        return bool(len(poly)) and point_in_convex(poly, x, y)

    def dumps(self) -> str:
        pbrs = self.pbrs
        lines = [f"# pvd2d objects={len(self.objects)} pbrs={len(pbrs)}"]
        for o in self.objects:
            coords = " ".join(repr(float(v)) for v in np.asarray(self.pvc(o.id), float).ravel())
            lines.append(f"pvc {o.id} {coords}".rstrip())
        for pb in pbrs:
            quad = " ".join(f"{float(p.x)!r} {float(p.y)!r}" for p in pb.quad)
            lines.append(f"pbr {pb.i} {pb.j} {float(pb.lval)!r} {float(pb.hval)!r} {quad}")
        return "\n".join(lines) + "\n"


# -- polygon helpers -----------------------------------------------------------

def clip_halfplane(poly: np.ndarray, n: np.ndarray, b: float) -> np.ndarray:
    """Clip a convex polygon to ``{x : n . x <= b}``."""
    if len(poly) == 0:
        return poly
    s = poly @ n - b
    out = []
    m = len(poly)
    for k in range(m):
        p, q = poly[k], poly[(k + 1) % m]
        sp, sq = s[k], s[(k + 1) % m]
        if sp <= 0:
            out.append(p)
        if (sp < 0 < sq) or (sq < 0 < sp):
            out.append(p + (q - p) * (sp / (sp - sq)))
    return np.array(out) if out else np.zeros((0, 2))


def point_in_convex(poly: np.ndarray, x: float, y: float, tol: float = 1e-9) -> bool:
    """Inside-or-on test for a counter-clockwise convex polygon."""
    if len(poly) < 3:
        return False
    p = poly
    q = np.roll(poly, -1, axis=0)
    cross = (q[:, 0] - p[:, 0]) * (y - p[:, 1]) - (q[:, 1] - p[:, 1]) * (x - p[:, 0])
    return bool(np.all(cross >= -tol * np.hypot(q[:, 0] - p[:, 0], q[:, 1] - p[:, 1])))


def _box_poly(box: Mbr) -> np.ndarray:
    return np.array([[box.xmin, box.ymin], [box.xmax, box.ymin],
                     [box.xmax, box.ymax], [box.xmin, box.ymax]], float)


def _box_halfplanes(box: Mbr) -> list[tuple[np.ndarray, float]]:
    return [(np.array([-1.0, 0.0]), -box.xmin), (np.array([1.0, 0.0]), box.xmax),
            (np.array([0.0, -1.0]), -box.ymin), (np.array([0.0, 1.0]), box.ymax)]


def _ray_exit(halfplanes, s: np.ndarray, d: np.ndarray) -> float:
    """Distance along unit ``d`` from ``s`` to the boundary of the half-plane intersection."""
    t = math.inf
    for n, b in halfplanes:
        nd = float(n @ d)
        if nd > 1e-15:
            t = min(t, (b - float(n @ s)) / nd)
    return max(t, 0.0)


# -- Voronoi diagram of centres --------------------------------------------------

def dedupe_discs(objects: Sequence[UncertainDisc]) -> tuple[list[UncertainDisc], dict]:
    """Resolve coincident centres: keep the smaller disc (smaller id on equal radii)."""
    best: dict = {}
    for o in objects:
        key = (round(o.center.x / LENGTH_TOL), round(o.center.y / LENGTH_TOL))
        cur = best.get(key)
        if cur is None or (o.radius, o.id) < (cur.radius, cur.id):
            best[key] = o
    kept = sorted(best.values(), key=lambda o: o.id)
    keep_ids = {o.id for o in kept}
    dropped = {}
    for o in objects:
        if o.id not in keep_ids:
            key = (round(o.center.x / LENGTH_TOL), round(o.center.y / LENGTH_TOL))
            dropped[o.id] = best[key].id
    return kept, dropped


def _neighbour_pairs(centres: np.ndarray) -> set[tuple[int, int]]:
    n = len(centres)
    try:
        if n < 3:
            raise QhullError("too few sites")
        vor = Voronoi(centres)
        return {(int(min(a, b)), int(max(a, b))) for a, b in vor.ridge_points}
    except (QhullError, ValueError):
        return {(a, b) for a in range(n) for b in range(a + 1, n)}


def _cell_halfplanes(centres: np.ndarray, a: int, nbrs, box: Mbr) -> list:
    hp = _box_halfplanes(box)
    ca = centres[a]
    for k in nbrs:
        ck = centres[k]
        n = ck - ca
        hp.append((n, float(n @ (0.5 * (ca + ck)))))
    return hp


def _clip_line(halfplanes, p0: np.ndarray, d: np.ndarray) -> Optional[tuple[float, float]]:
    lo, hi = -math.inf, math.inf
    for n, b in halfplanes:
        nd = float(n @ d)
        rhs = b - float(n @ p0)
        if abs(nd) < 1e-15:
            if rhs < 0:
                return None
            continue
        t = rhs / nd
        if nd > 0:
            hi = min(hi, t)
        else:
            lo = max(lo, t)
    return (lo, hi) if lo < hi else None


class _Layout:
    """Voronoi adjacency, cells and half-plane descriptions for a set of discs."""

    def __init__(self, objects: Sequence[UncertainDisc], space: Mbr):
        self.objects = list(objects)
        self.ids = [o.id for o in self.objects]
        self.centres = np.array([[o.center.x, o.center.y] for o in self.objects], float).reshape(-1, 2)
        self.radii = np.array([o.radius for o in self.objects], float)
        self.box = space.inflate(BOX_MARGIN)
        n = len(self.objects)
        self.nbrs: list[set[int]] = [set() for _ in range(n)]
        for a, b in _neighbour_pairs(self.centres) if n >= 2 else ():
            self.nbrs[a].add(b)
            self.nbrs[b].add(a)
        self.halfplanes = [_cell_halfplanes(self.centres, a, sorted(self.nbrs[a]), self.box)
                           for a in range(n)]
        self.cells = []
        for a in range(n):
            poly = _box_poly(self.box)
            for nv, b in self.halfplanes[a][4:]:
                poly = clip_halfplane(poly, nv, b)
            self.cells.append(poly)
        self.edges: list[tuple[int, int, Segment2D]] = []
        for a in range(n):
            for b in sorted(self.nbrs[a]):
                if b <= a:
                    continue
                seg = self._edge_segment(a, b)
                if seg is not None:
                    self.edges.append((a, b, seg))

    def _edge_segment(self, a: int, b: int) -> Optional[Segment2D]:
        ca, cb = self.centres[a], self.centres[b]
        u = cb - ca
        u = u / np.linalg.norm(u)
        d = np.array([-u[1], u[0]])
        m = 0.5 * (ca + cb)
        hp = [h for h in self.halfplanes[a][:4]]
        hp += [(nv, bb) for (nv, bb), k in zip(self.halfplanes[a][4:], sorted(self.nbrs[a])) if k != b]
        hp += [(nv, bb) for (nv, bb), k in zip(self.halfplanes[b][4:], sorted(self.nbrs[b])) if k != a]
        span = _clip_line(hp, m, d)
        if span is None or span[1] - span[0] <= 1e-9:
            return None
        pa, pb = m + span[0] * d, m + span[1] * d
        return Segment2D(Point2D(*pa), Point2D(*pb))


def center_voronoi(objects: Sequence[UncertainDisc], space: Mbr) -> list[VoronoiEdge]:
    """Voronoi edges of the disc centres, clipped to the inflated data space."""
    if len(objects) < 2:
        return []
    lay = _Layout(objects, space)
    return [VoronoiEdge(lay.ids[a], lay.ids[b], seg) for a, b, seg in lay.edges]


# -- probability field along an edge ------------------------------------------------

class _Context:
    """Shared state for probability evaluations during one construction."""

    def __init__(self, objects: Sequence[UncertainDisc], cfg: KernelConfig):
        self.table = ObjectTable(objects)
        self.rows = {oid: a for a, oid in enumerate(self.table.ids)}
        self.cfg = cfg
        self.centres = np.column_stack([self.table.cx, self.table.cy]) if len(objects) else np.zeros((0, 2))
        self.tree = cKDTree(self.centres) if len(objects) else None
        self.rmax = float(self.table.r.max()) if len(objects) else 0.0

    def field(self, i, j, center: np.ndarray, radius: float) -> "_PairField":
        """Probability difference ``p_i - p_j`` valid within ``radius`` of ``center``."""
        a, b = self.rows[i], self.rows[j]
        bound = float(np.linalg.norm(center - self.centres[a])) + radius + self.table.r[a]
        idx = self.tree.query_ball_point(center, bound + radius + self.rmax)
        rows = np.unique(np.concatenate([np.asarray(idx, dtype=int), [a, b]]))
        return _PairField(self, rows, a, b)


class _PairField:
    def __init__(self, ctx: _Context, rows: np.ndarray, a: int, b: int):
        self.ctx, self.rows, self.a, self.b = ctx, rows, a, b

    def __call__(self, p: np.ndarray) -> tuple[float, float]:
        prof = nn_profile(self.ctx.table, (float(p[0]), float(p[1])), self.ctx.cfg, self.rows)
        probs = dict(zip(prof.rows.tolist(), prof.probs.tolist()))
        pa, pb = probs.get(self.a, 0.0), probs.get(self.b, 0.0)
        return pa - pb, pa + pb


def _frame(oi: UncertainDisc, oj: UncertainDisc):
    ci, cj = oi.center.as_array(), oj.center.as_array()
    D = float(np.linalg.norm(cj - ci))
    u = (cj - ci) / D
    return ci, cj, D, u, 0.5 * (ci + cj)


class _NoSwap(Exception):
    """One object wins along the whole searched range."""


def _root_along(f, s: np.ndarray, u: np.ndarray, lo: float, hi: float,
                cfg: KernelConfig) -> Optional[tuple[float, float]]:
    """Bracket ``[a, b]`` (offsets along ``u`` from ``s``) holding the crossover nearest 0.

    ``f`` must be positive toward ``-u``.  Strides 1, 2, 4, ... units from 0
    in the deficit direction, then bisects to width ``cfg.step``.  Returns
    ``None`` when neither object has any probability at ``s`` (the pair does
    not compete there) and raises :class:`_NoSwap` when the range is exhausted.
    """
    f0, s0 = f(s)
    if s0 == 0:
        return None
    if f0 == 0:
        return (0.0, 0.0)
    direction = 1.0 if f0 > 0 else -1.0
    limit = hi if direction > 0 else lo
    prev, stride = 0.0, 1.0
    while True:
        x = prev + direction * stride
        x = min(x, limit) if direction > 0 else max(x, limit)
        fx, sx = f(s + x * u)
        swapped = (fx <= 0) if direction > 0 else (fx > 0)
        if swapped and sx > 0:
            a, b = sorted((prev, x))
            break
        if sx == 0:
            # both objects vanish before swapping: the crossover, if any, is
            # where the pair is out-competed by third objects
            a, b = sorted((prev, x))
            break
        if x == limit:
            raise _NoSwap(direction)
        prev, stride = x, 2 * stride
    while b - a > cfg.step:
        m = 0.5 * (a + b)
        fm, sm = f(s + m * u)
        if (fm > 0 if sm > 0 else direction < 0):
            a = m
        else:
            b = m
    return (a, b)


def _nearest_on_segment(seg: Segment2D, p: np.ndarray) -> np.ndarray:
    a, b = seg.a.as_array(), seg.b.as_array()
    d = b - a
    t = float(np.clip((p - a) @ d / (d @ d), 0.0, 1.0)) if d @ d > 0 else 0.0
    return a + t * d


def equality_offset(oi: UncertainDisc, oj: UncertainDisc, station: Point2D,
                    objects: Sequence[UncertainDisc], cfg: KernelConfig = DEFAULT_CONFIG,
                    limit: Optional[float] = None) -> Optional[float]:
    """Signed offset, along the normal from ``c_i`` to ``c_j``, of the equality point
    on the line through ``station`` perpendicular to the centre bisector."""
    ctx = _Context(objects, cfg)
    ci, cj, D, u, _ = _frame(oi, oj)
    lim = D / 2 if limit is None else limit
    s = station.as_array()
    f = ctx.field(oi.id, oj.id, s, lim)
    try:
        br = _root_along(f, s, u, -lim, lim, cfg)
    except _NoSwap:
        return None
    return None if br is None else 0.5 * (br[0] + br[1])


# -- band construction ----------------------------------------------------------

def init_pbr_bound(oi: UncertainDisc, oj: UncertainDisc, edge: VoronoiEdge,
                   objects: Sequence[UncertainDisc], cfg: KernelConfig = DEFAULT_CONFIG,
                   _ctx: Optional[_Context] = None) -> tuple[float, float, bool]:
    """Offsets bracketing the equality point on the line through both centres.

    Returns ``(lval, hval, flagged)``; ``flagged`` is set when no swap lies
    between the two centres.
    """
    if abs(oi.radius - oj.radius) <= LENGTH_TOL:
        return 0.0, 0.0, False
    ctx = _ctx or _Context(objects, cfg)
    ci, cj, D, u, m = _frame(oi, oj)
    # start from the edge point nearest the centre midpoint; when the edge
    # crosses the centre line this is the crossing itself
    s = _nearest_on_segment(edge.segment, m)
    lim = D / 2
    f = ctx.field(oi.id, oj.id, s, lim)
    try:
        br = _root_along(f, s, u, -lim, lim, cfg)
    except _NoSwap as e:
        return (0.0, lim, True) if e.args[0] > 0 else (-lim, 0.0, True)
    if br is None:
        return 0.0, 0.0, False
    return min(0.0, br[0]), max(0.0, br[1]), False


def find_influenced_part(oi: UncertainDisc, oj: UncertainDisc, edge: VoronoiEdge,
                         objects: Sequence[UncertainDisc],
                         _ctx: Optional[_Context] = None) -> list[Segment2D]:
    """Parts of the edge where some third object may beat the smaller of the pair."""
    small = oi if oi.radius <= oj.radius else oj
    seg = edge.segment
    a, b = seg.a.as_array(), seg.b.as_array()
    L = float(np.linalg.norm(b - a))
    if L <= 0:
        return []
    cs, rs = small.center.as_array(), small.radius
    reach = max(np.linalg.norm(a - cs), np.linalg.norm(b - cs)) + rs
    if _ctx is not None and _ctx.tree is not None:
        idx = _ctx.tree.query_ball_point(0.5 * (a + b), reach + L / 2 + _ctx.rmax)
        others = [_ctx.table.objects[k] for k in idx]
    else:
        others = list(objects)
    others = [o for o in others if o.id not in (oi.id, oj.id)]
    if not others:
        return []
    d = (b - a) / L
    intervals = []
    for ok in others:
        ck, rk = ok.center.as_array(), ok.radius

        def h(t, ck=ck, rk=rk):
            p = a + t * (b - a)
            return np.linalg.norm(p - cs) + rs - (np.linalg.norm(p - ck) - rk)

        extra = [float(np.clip((ck - a) @ d / L, 0, 1)), float(np.clip((cs - a) @ d / L, 0, 1))]
        ts = np.unique(np.concatenate([np.linspace(0.0, 1.0, INFLUENCE_SAMPLES), extra]))
        P = a[None, :] + ts[:, None] * (b - a)[None, :]
        hv = np.linalg.norm(P - cs, axis=1) + rs - (np.linalg.norm(P - ck, axis=1) - rk)
        pos = hv > 0
        if not pos.any():
            continue
        k = 0
        while k < len(ts):
            if not pos[k]:
                k += 1
                continue
            start = k
            while k + 1 < len(ts) and pos[k + 1]:
                k += 1
            t0 = ts[start] if start == 0 else brentq(h, ts[start - 1], ts[start], xtol=1e-12)
            t1 = ts[k] if k == len(ts) - 1 else brentq(h, ts[k], ts[k + 1], xtol=1e-12)
            intervals.append((float(t0), float(t1)))
            k += 1
    if not intervals:
        return []
    intervals.sort()
    merged = [list(intervals[0])]
    for t0, t1 in intervals[1:]:
        if t0 <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], t1)
        else:
            merged.append([t0, t1])
    return [Segment2D(seg.at(t0), seg.at(t1)) for t0, t1 in merged]


def update_pbr_bound(bounds: tuple[float, float], segment: Segment2D, oi: UncertainDisc,
                     oj: UncertainDisc, objects: Sequence[UncertainDisc],
                     cfg: KernelConfig = DEFAULT_CONFIG,
                     _ctx: Optional[_Context] = None) -> tuple[float, float, bool]:
    """Widen ``bounds`` by the equality points at the segment's ends and midpoint.

    Returns ``(lval, hval, flagged)``; a station with no swap within a quarter
    of the centre distance widens the band to that limit and sets the flag.
    """
    ctx = _ctx or _Context(objects, cfg)
    ci, cj, D, u, _ = _frame(oi, oj)
    lim = D / 4
    lval, hval = bounds
    flagged = False
    a, b = segment.a.as_array(), segment.b.as_array()
    for s in (a, 0.5 * (a + b), b):
        f = ctx.field(oi.id, oj.id, s, lim)
        try:
            br = _root_along(f, s, u, -lim, lim, cfg)
        except _NoSwap as e:
            if e.args[0] > 0:
                hval = max(hval, lim)
            else:
                lval = min(lval, -lim)
            flagged = True
            continue
        if br is not None:
            lval, hval = min(lval, br[0]), max(hval, br[1])
    return lval, hval, flagged


def _scan_bounds(ctx: _Context, oi: UncertainDisc, oj: UncertainDisc, stations,
                 cell_i_hp, cell_j_hp, bounds: tuple[float, float]) -> tuple[float, float]:
    """Robust band for overlapping discs: every crossover across both cells.

    When the discs overlap the bisector curve can close around the smaller
    disc, so each station is scanned across the whole width of both cells.
    """
    cfg = ctx.cfg
    ci, cj, D, u, _ = _frame(oi, oj)
    lval, hval = bounds
    for s in stations:
        ti = _ray_exit(cell_i_hp, s, -u)
        tj = _ray_exit(cell_j_hp, s, u)
        if not (math.isfinite(ti) and math.isfinite(tj)):
            continue
        f = ctx.field(oi.id, oj.id, s, max(ti, tj))
        offs = np.linspace(-ti, tj, SCAN_SAMPLES)
        vals = [f(s + o * u) for o in offs]
        fv = np.array([v[0] for v in vals])
        sv = np.array([v[1] for v in vals])
        if fv[0] < 0 and sv[0] > cfg.prob_epsilon:
            lval = min(lval, -ti)
        if fv[-1] > 0 and sv[-1] > cfg.prob_epsilon:
            hval = max(hval, tj)
        for k in range(len(offs) - 1):
            if (fv[k] > 0) == (fv[k + 1] > 0) or max(sv[k], sv[k + 1]) <= 0:
                continue
            a, b = offs[k], offs[k + 1]
            pos_left = fv[k] > 0
            while b - a > cfg.step:
                m = 0.5 * (a + b)
                fm, _ = f(s + m * u)
                if (fm > 0) == pos_left:
                    a = m
                else:
                    b = m
            lval, hval = min(lval, a), max(hval, b)
    return lval, hval


def prob_bisector_2d(oi: UncertainDisc, oj: UncertainDisc, edge: VoronoiEdge,
                     objects: Sequence[UncertainDisc], cfg: KernelConfig = DEFAULT_CONFIG,
                     _ctx: Optional[_Context] = None, _cells=None) -> Pbr:
    """Band for one Voronoi edge; zero width when the radii are equal."""
    ci, cj, D, u, m = _frame(oi, oj)
    origin, normal = (float(m[0]), float(m[1])), (float(u[0]), float(u[1]))
    if abs(oi.radius - oj.radius) <= LENGTH_TOL:
        return Pbr(oi.id, oj.id, edge, 0.0, 0.0, origin, normal)
    ctx = _ctx or _Context(objects, cfg)
    lval, hval, flagged = init_pbr_bound(oi, oj, edge, objects, cfg, ctx)
    parts = find_influenced_part(oi, oj, edge, objects, ctx)
    for part in parts:
        lval, hval, fl = update_pbr_bound((lval, hval), part, oi, oj, objects, cfg, ctx)
        flagged = flagged or fl
    entangled = D < oi.radius + oj.radius
    if (entangled or flagged) and _cells is not None:
        seg = edge.segment
        a, b = seg.a.as_array(), seg.b.as_array()
        stations = [a, 0.5 * (a + b), b]
        d = b - a
        t = float(np.clip((m - a) @ d / (d @ d), 0.0, 1.0))
        stations.append(a + t * d)
        for part in parts:
            pa, pb = part.a.as_array(), part.b.as_array()
            stations += [pa, 0.5 * (pa + pb), pb]
        lval, hval = _scan_bounds(ctx, oi, oj, stations, _cells[0], _cells[1], (lval, hval))
    return Pbr(oi.id, oj.id, edge, float(lval), float(hval), origin, normal, flagged)


def prob_voronoi_2d(objects: Sequence[UncertainDisc], space: Optional[Mbr] = None,
                    cfg: KernelConfig = DEFAULT_CONFIG, lazy: bool = False) -> Pvd2D:
    """Build the diagram: centre Voronoi, one band per edge, cells shrunk by the bands."""
    kept, dropped = dedupe_discs(objects)
    if not kept:
        raise ValueError("prob_voronoi_2d needs at least one object")
    if space is None:
        space = Mbr.of_points([[o.center.x - o.radius, o.center.y - o.radius] for o in kept]
                              + [[o.center.x + o.radius, o.center.y + o.radius] for o in kept])
    return Pvd2D(kept, space, cfg, dropped, lazy=lazy)


def locate_2d(pvd: Pvd2D, q: Point2D) -> Location:
    """Classify ``q`` as inside one probabilistic cell, one band, or several bands."""
    x, y = (q.x, q.y) if isinstance(q, Point2D) else (float(q[0]), float(q[1]))
    if not pvd.box.contains_point(x, y):
        raise ValueError(f"query ({x}, {y}) outside the data space")
    oid = pvd.nearest_site(x, y)
    # bands are closed, so a point on a band's edge (or on a zero-width band) is in the band
    hits = [k for k in pvd.incident[oid] if pvd.band_hit(k, oid, x, y)]
    if not hits:
        if pvd.in_pvc(oid, x, y) or not pvd.incident[oid]:
            return InCell(oid)
        # rounding on a cell boundary: fall back to all incident bands
        hits = list(pvd.incident[oid])
    if len(hits) == 1:
        pb = pvd.pbr(hits[0])
        return InPbr((pb.i, pb.j), hits[0])
    owners = frozenset().union(*(pvd.pbr(k).owners for k in hits))
    return InMultiPbr(owners, tuple(hits))
