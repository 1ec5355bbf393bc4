"""Synthetic objects and query trajectories, plus their text file formats.

Dataset files start with ``# pvd-dataset v1 dim=<1|2>`` followed by one
object per line: ``id,cx,cy,r`` for discs and ``id,l,u`` for intervals.
Trajectory files start with ``# pvd-trajectory v1 dim=<1|2>`` followed by
``x,y`` (or ``x``) per line.  Numbers are written with ``repr`` so a save
and load round trip reproduces every float exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .engine import Trajectory
from .geometry import Point2D, UncertainDisc, UncertainInterval

DATASET_HEADER = "# pvd-dataset v1 dim={dim}"
TRAJECTORY_HEADER = "# pvd-trajectory v1 dim={dim}"
#: Grid cells per axis used to skew coordinates for the Zipfian distribution.
ZIPF_CELLS = 100
#: Standard deviation of the heading change of a directional trajectory.
DIRECTIONAL_JITTER_DEG = 5.0


@dataclass(frozen=True)
class WorkloadSpec:
    dim: int = 2
    distribution: str = "uniform"  # or "zipf"
    n: int = 1000
    extent: float = 10_000.0
    size_min: float = 5.0
    size_max: float = 30.0
    zipf_alpha: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.distribution not in ("uniform", "zipf"):
            raise ValueError("distribution must be 'uniform' or 'zipf'")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.size_min <= self.size_max <= self.extent:
            raise ValueError("need 0 <= size_min <= size_max <= extent")
        if self.zipf_alpha <= 0:
            raise ValueError("zipf_alpha must be positive")


def zipf_cell_probs(cells: int, alpha: float) -> np.ndarray:
    """Probability of grid cell ``k`` (0-based), proportional to ``1 / (k + 1) ** alpha``."""
    w = 1.0 / np.arange(1, cells + 1, dtype=float) ** alpha
    return w / w.sum()


def _coordinates(rng: np.random.Generator, spec: WorkloadSpec, lo: np.ndarray,
                 hi: np.ndarray) -> np.ndarray:
    """One coordinate per object, inside ``[lo, hi]`` (arrays, per object)."""
    if spec.distribution == "uniform":
        return rng.uniform(lo, hi)
    width = spec.extent / ZIPF_CELLS
    cell = rng.choice(ZIPF_CELLS, size=len(lo), p=zipf_cell_probs(ZIPF_CELLS, spec.zipf_alpha))
    x = (cell + rng.uniform(0.0, 1.0, size=len(lo))) * width
    return np.clip(x, lo, hi)


def gen_objects(spec: WorkloadSpec) -> list[Union[UncertainDisc, UncertainInterval]]:
    """Objects with ids ``0..n-1``; every object lies inside ``[0, extent]`` per axis."""
    rng = np.random.default_rng(spec.seed)
    size = rng.uniform(spec.size_min, spec.size_max, size=spec.n)
    if spec.dim == 1:
        lower = _coordinates(rng, spec, np.zeros(spec.n), spec.extent - size)
        return [UncertainInterval(a, float(l), float(l + s))
                for a, (l, s) in enumerate(zip(lower, size))]
    r = 0.5 * size
    cx = _coordinates(rng, spec, r, spec.extent - r)
    cy = _coordinates(rng, spec, r, spec.extent - r)
    return [UncertainDisc(a, Point2D(float(x), float(y)), float(rad))
            for a, (x, y, rad) in enumerate(zip(cx, cy, r))]


def gen_trajectory(kind: str, steps: int, step_len: float, extent: float, seed: int,
                   dim: int = 2, jitter_deg: float = DIRECTIONAL_JITTER_DEG) -> Trajectory:
    """A walk of ``steps`` points, ``step_len`` apart, that stays inside ``[0, extent]``.

    ``random`` draws a fresh heading at every step; ``directional`` keeps its
    heading up to a Gaussian jitter of ``jitter_deg`` degrees.  A step that
    would leave the space has its heading mirrored at that border.
    """
    if kind not in ("random", "directional"):
        raise ValueError("kind must be 'random' or 'directional'")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not 0 <= step_len < 0.5 * extent:
        raise ValueError("step_len must lie in [0, extent / 2)")
    rng = np.random.default_rng(seed)
    if dim == 1:
        x = float(rng.uniform(0.0, extent))
        heading = 1.0 if rng.uniform() < 0.5 else -1.0
        pts = [x]
        for _ in range(steps - 1):
            if kind == "random":
                heading = 1.0 if rng.uniform() < 0.5 else -1.0
            if not 0.0 <= x + heading * step_len <= extent:
                heading = -heading
            x += heading * step_len
            pts.append(x)
        return Trajectory(np.array(pts), step_len)

    x, y = (float(v) for v in rng.uniform(0.0, extent, size=2))
    theta = float(rng.uniform(0.0, 2 * math.pi))
    jitter = math.radians(jitter_deg)
    pts = [(x, y)]
    for _ in range(steps - 1):
        if kind == "random":
            theta = float(rng.uniform(0.0, 2 * math.pi))
        elif jitter > 0:
            theta += float(rng.normal(0.0, jitter))
        dx, dy = step_len * math.cos(theta), step_len * math.sin(theta)
        if not 0.0 <= x + dx <= extent:
            dx = -dx
        if not 0.0 <= y + dy <= extent:
            dy = -dy
        theta = math.atan2(dy, dx)
        x, y = x + dx, y + dy
        pts.append((x, y))
    return Trajectory(np.array(pts), step_len)


# -- files ---------------------------------------------------------------------

def _parse_id(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _read_header(lines: list[str], kind: str) -> int:
    head = lines[0].strip()
    prefix = f"# {kind} v1 dim="
    if not head.startswith(prefix) or head[len(prefix):] not in ("1", "2"):
        raise ValueError(f"line 1: expected '{prefix}<1|2>', got {head!r}")
    return int(head[len(prefix):])


def save_objects(path: Union[str, Path], objects: Sequence) -> None:
    objects = list(objects)
    dim = 1 if objects and isinstance(objects[0], UncertainInterval) else 2
    lines = [DATASET_HEADER.format(dim=dim)]
    for o in objects:
        if dim == 1:
            lines.append(f"{o.id},{o.lower!r},{o.upper!r}")
        else:
            lines.append(f"{o.id},{o.center.x!r},{o.center.y!r},{o.radius!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def load_objects(path: Union[str, Path]) -> list:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or not any(ln.strip() for ln in lines):
        return []
    dim = _read_header(lines, "pvd-dataset")
    want = 3 if dim == 1 else 4
    out = []
    for ln, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != want:
            raise ValueError(f"line {ln}: expected {want} comma-separated fields, got {line!r}")
        try:
            vals = [float(p) for p in parts[1:]]
            if dim == 1:
                out.append(UncertainInterval(_parse_id(parts[0]), vals[0], vals[1]))
            else:
                out.append(UncertainDisc(_parse_id(parts[0]), Point2D(vals[0], vals[1]), vals[2]))
        except ValueError as exc:
            raise ValueError(f"line {ln}: {exc}") from None
    return out


def save_trajectory(path: Union[str, Path], traj: Trajectory) -> None:
    lines = [TRAJECTORY_HEADER.format(dim=traj.dim)]
    if traj.dim == 1:
        lines += [f"{float(x)!r}" for x in traj.points]
    else:
        lines += [f"{float(x)!r},{float(y)!r}" for x, y in traj.points]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    """Read a trajectory; the step length is taken from the first segment."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines:
        raise ValueError("empty trajectory file")
    dim = _read_header(lines, "pvd-trajectory")
    pts = []
    for ln, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != dim:
            raise ValueError(f"line {ln}: expected {dim} comma-separated fields, got {line!r}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"line {ln}: {exc}") from None
        pts.append(vals[0] if dim == 1 else vals)
    arr = np.array(pts, dtype=float)
    step = float(np.linalg.norm(np.atleast_1d(arr[1] - arr[0]))) if len(arr) > 1 else 0.0
    return Trajectory(arr, step)
