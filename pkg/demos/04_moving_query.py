"""Three ways to follow the most probable nearest neighbour along a path.

A query walks 1000 steps of 5 units through 400 uncertain discs.  The naive
client asks the server at every step; the pre-computed client buffers
diagram cells; the incremental client fetches a neighbourhood and answers
locally while a safety test holds.  All three report the same winners
wherever the top two probabilities are clearly apart.

    python3 demos/04_moving_query.py
"""

import time

from probvoronoi import (Server, WorkloadSpec, gen_objects, gen_trajectory, ipvd_pmnn, naive_pmnn,
                         ppvd_pmnn)
from probvoronoi.engine import winner_and_gap
from probvoronoi.kernel import ObjectTable

spec = WorkloadSpec(n=400, extent=4000.0, seed=1)
objects = gen_objects(spec)
traj = gen_trajectory("directional", 1001, 5.0, spec.extent, seed=1)

server = Server(objects)
t0 = time.perf_counter()
server.attach_pvd()
print(f"diagram of {len(objects)} objects built in {time.perf_counter() - t0:.1f}s\n")

runs = {"naive": naive_pmnn(traj, server)}
for w in (0, 200, 400):
    runs[f"ppvd window={w}"] = ppvd_pmnn(traj, server, float(w))
for k in (10, 30, 50):
    runs[f"ipvd k={k}"] = ipvd_pmnn(traj, server, k)

table = ObjectTable(objects)
truth = [winner_and_gap(table, q) for q in traj.positions()]
print("method              communications     io   time_s  agrees")
for name, (steps, m) in runs.items():
    agrees = all(s.winner == w for s, (w, gap) in zip(steps, truth) if gap > 1e-4)
    print(f"{name:<18}  {m.communications:>14}  {m.io:>5}  {m.time_s:>7.3f}  {agrees}")
