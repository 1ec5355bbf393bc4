"""Nearest centre is not the most probable nearest neighbour.

Three uncertain discs around a query point.  The disc whose centre is
closest is large, so its mass is spread out; a small disc a little farther
away is more likely to hold the true nearest position.  The kernel's
answer is checked against a Monte Carlo estimate.

    python3 demos/01_nn_probabilities.py
"""

from probvoronoi import Point2D, UncertainDisc, mc_oracle, pnn_probs, top1_pnn

q = Point2D(0.0, 0.0)
objects = [
    UncertainDisc(1, Point2D(0.0, 6.0), 1.0),
    UncertainDisc(2, Point2D(5.0, 0.0), 8.0),
    UncertainDisc(3, Point2D(-7.0, 0.0), 2.0),
]

probs = pnn_probs(objects, q)
print("object  centre dist  radius  P(nearest)  Monte Carlo")
for o, p in zip(objects, probs):
    est = mc_oracle(objects, o.id, q, trials=200_000, seed=1)
    print(f"{o.id:>6}  {q.dist(o.center):>11.1f}  {o.radius:>6.1f}  {p:>10.4f}  {est:>11.4f}")

best = top1_pnn(objects, q)
nearest_centre = min(objects, key=lambda o: q.dist(o.center))
print(f"\nclosest centre: object {nearest_centre.id}; most probable nearest neighbour: "
      f"object {best.id} (p = {best.prob:.4f})")
