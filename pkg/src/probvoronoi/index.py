"""A bulk-loaded MBR tree with node-access accounting.

Leaves hold ``(Mbr, payload)`` entries; inner nodes hold child nodes.  The
tree is packed bottom-up with sort-tile-recursive ordering, so the same
entries always produce the same tree.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterator, Optional, Sequence

import numpy as np

from .geometry import Mbr


@dataclass
class IoCounter:
    node_accesses: int = 0

    def hit(self, n: int = 1) -> None:
        self.node_accesses += n


@dataclass
class IndexNode:
    level: int  # 0 for leaves
    mbr: Mbr
    children: list = field(default_factory=list)  # IndexNode (inner) or (Mbr, payload) (leaf)

    @property
    def is_leaf(self) -> bool:
        return self.level == 0


def _union_all(boxes: Sequence[Mbr]) -> Mbr:
    return Mbr(min(b.xmin for b in boxes), min(b.ymin for b in boxes),
               max(b.xmax for b in boxes), max(b.ymax for b in boxes))


def _str_groups(boxes: Sequence[Mbr], capacity: int) -> list[list[int]]:
    """Sort-tile-recursive grouping of boxes into runs of at most ``capacity``."""
    n = len(boxes)
    cx = np.array([0.5 * (b.xmin + b.xmax) for b in boxes])
    cy = np.array([0.5 * (b.ymin + b.ymax) for b in boxes])
    pages = math.ceil(n / capacity)
    slabs = math.ceil(math.sqrt(pages))
    per_slab = slabs * capacity
    by_x = np.lexsort((cy, cx))
    groups = []
    for s in range(0, n, per_slab):
        slab = by_x[s:s + per_slab]
        slab = slab[np.lexsort((cx[slab], cy[slab]))]
        for g in range(0, len(slab), capacity):
            groups.append([int(a) for a in slab[g:g + capacity]])
    return groups


class MbrTree:
    """Read-only MBR hierarchy over ``(Mbr, payload)`` entries."""

    def __init__(self, entries: Sequence[tuple[Mbr, Hashable]], capacity: int = 50):
        if capacity < 2:
            raise ValueError("capacity must be >= 2")
        self.capacity = capacity
        self.entries = list(entries)
        self.root: Optional[IndexNode] = None
        self.node_count = 0
        self.height = 0
        if not self.entries:
            return
        level = []
        for grp in _str_groups([e[0] for e in self.entries], capacity):
            kids = [self.entries[a] for a in grp]
            level.append(IndexNode(0, _union_all([k[0] for k in kids]), kids))
        self.node_count = len(level)
        self.height = 1
        while len(level) > 1:
            up = []
            for grp in _str_groups([nd.mbr for nd in level], capacity):
                kids = [level[a] for a in grp]
                up.append(IndexNode(kids[0].level + 1, _union_all([k.mbr for k in kids]), kids))
            level = up
            self.node_count += len(level)
            self.height += 1
        self.root = level[0]

    def __len__(self) -> int:
        return len(self.entries)

    def nodes(self) -> Iterator[IndexNode]:
        stack = [self.root] if self.root else []
        while stack:
            nd = stack.pop()
            yield nd
            if not nd.is_leaf:
                stack.extend(nd.children)

    def window_query(self, window: Mbr, counter: Optional[IoCounter] = None) -> list:
        counter = counter if counter is not None else IoCounter()
        out = []
        if self.root is None:
            counter.hit()
            return out
        stack = [self.root]
        while stack:
            nd = stack.pop()
            counter.hit()
            if nd.is_leaf:
                out.extend(p for box, p in nd.children if box.intersects(window))
            else:
                stack.extend(c for c in nd.children if c.mbr.intersects(window))
        return out

    def point_query(self, x: float, y: float = 0.0, counter: Optional[IoCounter] = None) -> list:
        return self.window_query(Mbr(x, y, x, y), counter)

    def mindist_scan(self, x: float, y: float = 0.0,
                     counter: Optional[IoCounter] = None) -> Iterator[tuple[float, Hashable]]:
        """Yield ``(mbr_mindist, payload)`` in non-decreasing key order."""
        counter = counter if counter is not None else IoCounter()
        if self.root is None:
            return
        tie = itertools.count()
        heap = [(self.root.mbr.mindist(x, y), next(tie), self.root)]
        while heap:
            key, _, item = heapq.heappop(heap)
            if isinstance(item, IndexNode):
                counter.hit()
                if item.is_leaf:
                    for box, p in item.children:
                        heapq.heappush(heap, (box.mindist(x, y), next(tie), ("entry", p)))
                else:
                    for c in item.children:
                        heapq.heappush(heap, (c.mbr.mindist(x, y), next(tie), c))
            else:
                yield key, item[1]


def build(entries: Sequence[tuple[Mbr, Hashable]], capacity: int = 50) -> MbrTree:
    return MbrTree(entries, capacity)
