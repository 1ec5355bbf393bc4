"""A probabilistic Voronoi diagram over uncertain discs.

Builds the diagram of 25 random discs, reports how the plane splits into
certain cells and uncertain bands, and writes a picture to
``demos/diagram_2d.png`` when matplotlib is available.

    python3 demos/03_diagram_2d.py
"""

from pathlib import Path

import numpy as np

from probvoronoi import InCell, Mbr, Point2D, UncertainDisc, locate_2d, prob_voronoi_2d

rng = np.random.default_rng(8)
objects = [UncertainDisc(a, Point2D(*map(float, rng.uniform(0, 500, 2))), float(rng.uniform(3, 20)))
           for a in range(25)]
pvd = prob_voronoi_2d(objects, Mbr(0, 0, 500, 500))

widths = [pb.hval - pb.lval for pb in pvd.pbrs]
print(f"{len(pvd.edges)} Voronoi edges; band width median {np.median(widths):.2f}, "
      f"max {max(widths):.2f}; {sum(pb.flagged for pb in pvd.pbrs)} flagged")

probes = rng.uniform(0, 500, (4000, 2))
in_cell = sum(isinstance(locate_2d(pvd, Point2D(x, y)), InCell) for x, y in probes)
print(f"{100 * in_cell / len(probes):.1f}% of the area is answered by a cell alone")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit("matplotlib not installed; skipping the picture")

fig, ax = plt.subplots(figsize=(7, 7))
for o in objects:
    poly = np.asarray(pvd.pvc(o.id))
    if len(poly):
        ax.fill(poly[:, 0], poly[:, 1], alpha=0.35)
    ax.add_patch(plt.Circle((o.center.x, o.center.y), o.radius, fill=False, lw=0.8))
    ax.annotate(str(o.id), (o.center.x, o.center.y), ha="center", va="center", fontsize=7)
for k in range(len(pvd.edges)):
    for poly in pvd.band_polys(k):
        if len(poly):
            ax.fill(poly[:, 0], poly[:, 1], color="grey", alpha=0.6)
ax.set_xlim(-25, 525)
ax.set_ylim(-25, 525)
ax.set_aspect("equal")
ax.set_title("cells (coloured) and uncertain bands (grey)")
out = Path(__file__).with_name("diagram_2d.png")
fig.savefig(out, dpi=120)
print(f"wrote {out}")
