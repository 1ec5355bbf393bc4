"""``pvd-bench``: generate workloads, build diagrams and time the moving-query strategies.

Subcommands::

    gen        write a dataset file (and optionally a trajectory file)
    build-pvd  build the diagram of a dataset and write its text dump
    run        run one or more strategies on one configuration
    sweep      run a grid of configurations (comma-separated flag values)

``run`` and ``sweep`` write one CSV row per (configuration, method,
repetition) with the columns in :data:`CSV_COLUMNS`.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
import time
from typing import Callable, Optional, Sequence, TextIO

from .engine import Server, Trajectory, ipvd_pmnn, naive_pmnn, ppvd_pmnn
from .kernel import KernelConfig
from .pvd1d import prob_voronoi_1d
from .pvd2d import prob_voronoi_2d
from .workload import (WorkloadSpec, gen_objects, gen_trajectory, load_objects,
                       load_trajectory, save_objects, save_trajectory)

CSV_COLUMNS = ("method", "dim", "dist", "n", "traj", "steps", "k", "buffer_window",
               "time_s", "io", "communications", "seed")
STEP_COLUMNS = ("method", "repetition", "step", "x", "y", "winner", "resolution")
METHODS = ("naive", "ppvd", "ipvd")
#: Flags that accept a comma-separated list under ``sweep``.
SWEEPABLE = ("n", "k", "buffer_window", "steps", "seed")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_workload_flags(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    num = str if sweep else int
    p.add_argument("--dim", type=int, choices=(1, 2), default=2)
    p.add_argument("--dist", choices=("uniform", "zipf"), default="uniform")
    p.add_argument("--zipf-alpha", type=float, default=1.0)
    p.add_argument("--n", type=num, default=num(1000))
    p.add_argument("--extent", type=float, default=10_000.0)
    p.add_argument("--size-min", type=float, default=5.0)
    p.add_argument("--size-max", type=float, default=30.0)
    p.add_argument("--seed", type=num, default=num(0))
    p.add_argument("--data", help="read objects from a dataset file instead of generating them")


def _add_traj_flags(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    num = str if sweep else int
    p.add_argument("--traj", choices=("random", "directional"), default="random")
    p.add_argument("--steps", type=num, default=num(1000))
    p.add_argument("--step-len", type=float, default=5.0)
    p.add_argument("--traj-file", help="read the trajectory from a file instead of generating it")


def _add_kernel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=("discrete", "continuous"), default="continuous")
    p.add_argument("--step-size", type=float, default=0.25)
    p.add_argument("--epsilon", type=float, default=1e-4)


def _add_run_flags(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    num = str if sweep else int
    real = str if sweep else float
    p.add_argument("--method", default="naive",
                   help="naive, ppvd, ipvd or a comma-separated list of them")
    p.add_argument("--k", type=num, default=num(10))
    p.add_argument("--buffer-window", type=real, default=real(0.0))
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--steps-out", help="also write per-step winners to this CSV file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvd-bench", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a dataset (and optionally a trajectory)")
    _add_workload_flags(g)
    _add_traj_flags(g)
    g.add_argument("--out", required=True, help="dataset file to write")
    g.add_argument("--traj-out", help="trajectory file to write")

    b = sub.add_parser("build-pvd", help="build a diagram and write its dump")
    _add_workload_flags(b)
    _add_kernel_flags(b)
    b.add_argument("--out", help="dump file (default: stdout)")

    r = sub.add_parser("run", help="run strategies on one configuration")
    _add_workload_flags(r)
    _add_traj_flags(r)
    _add_kernel_flags(r)
    _add_run_flags(r)

    s = sub.add_parser("sweep", help="run a grid of configurations")
    _add_workload_flags(s, sweep=True)
    _add_traj_flags(s, sweep=True)
    _add_kernel_flags(s)
    _add_run_flags(s, sweep=True)
    return parser


# -- helpers ---------------------------------------------------------------------

def _kernel(args, parser) -> KernelConfig:
    try:
        return KernelConfig(mode=args.kernel, step=args.step_size, prob_epsilon=args.epsilon)
    except ValueError as exc:
        parser.error(str(exc))


def _spec(args, parser, n: int, seed: int) -> WorkloadSpec:
    try:
        return WorkloadSpec(dim=args.dim, distribution=args.dist, n=n, extent=args.extent,
                            size_min=args.size_min, size_max=args.size_max,
                            zipf_alpha=args.zipf_alpha, seed=seed)
    except ValueError as exc:
        parser.error(str(exc))


def _methods(text: str, parser) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        parser.error(f"--method must be drawn from {', '.join(METHODS)}; got {text!r}")
    return methods


def _objects(args, parser, n: int, seed: int) -> list:
    if args.data:
        objs = load_objects(args.data)
        if not objs:
            parser.error(f"dataset {args.data} is empty")
        dim = 1 if not hasattr(objs[0], "center") else 2
        if dim != args.dim:
            parser.error(f"dataset {args.data} is {dim}D but --dim is {args.dim}")
        return objs
    return gen_objects(_spec(args, parser, n, seed))


def _trajectory(args, parser, steps: int, seed: int) -> Trajectory:
    if args.traj_file:
        traj = load_trajectory(args.traj_file)
        if traj.dim != args.dim:
            parser.error(f"trajectory {args.traj_file} is {traj.dim}D but --dim is {args.dim}")
        return traj
    if steps < 1:
        parser.error("--steps must be >= 1")
    try:
        return gen_trajectory(args.traj, steps, args.step_len, args.extent, seed, dim=args.dim)
    except ValueError as exc:
        parser.error(str(exc))


class _Sink:
    """Serialised CSV writer for result rows and optional per-step rows."""

    def __init__(self, out: TextIO, steps_out: Optional[TextIO]):
        self.rows = csv.writer(out, lineterminator="\n")
        self.rows.writerow(CSV_COLUMNS)
        self.steps = None
        if steps_out is not None:
            self.steps = csv.writer(steps_out, lineterminator="\n")
            self.steps.writerow(STEP_COLUMNS)
        self._out = out

    def row(self, values: dict) -> None:
        self.rows.writerow([values[c] for c in CSV_COLUMNS])
        self._out.flush()

    def step_rows(self, method: str, rep: int, results) -> None:
        if self.steps is None:
            return
        for a, s in enumerate(results):
            if hasattr(s.position, "x"):
                x, y = s.position.x, s.position.y
            else:
                x, y = s.position, ""
            self.steps.writerow([method, rep, a, repr(x), repr(y) if y != "" else "",
                                 s.winner, s.resolution])


def _run_point(sink: _Sink, server: Server, traj: Trajectory, methods: Sequence[str],
               k: int, window: float, reps: int, meta: dict) -> None:
    for method in methods:
        for rep in range(reps):
            if method == "naive":
                res, m = naive_pmnn(traj, server)
            elif method == "ppvd":
                res, m = ppvd_pmnn(traj, server, window)
            else:
                res, m = ipvd_pmnn(traj, server, k)
            sink.row(dict(meta, method=method, steps=len(traj),
                          k=k if method == "ipvd" else "",
                          buffer_window=window if method == "ppvd" else "",
                          time_s=f"{m.time_s:.6f}", io=m.io, communications=m.communications))
            sink.step_rows(method, rep, res)


def _check_run_values(parser, ks, windows, reps) -> None:
    if any(k < 1 for k in ks):
        parser.error("--k must be >= 1")
    if any(w < 0 for w in windows):
        parser.error("--buffer-window must be >= 0")
    if reps < 1:
        parser.error("--repetitions must be >= 1")


def _open(path: Optional[str], default: Optional[TextIO]):
    return open(path, "w", newline="") if path else default


# -- commands --------------------------------------------------------------------

def cmd_gen(args, parser) -> int:
    objs = _objects(args, parser, args.n, args.seed)
    save_objects(args.out, objs)
    if args.traj_out:
        save_trajectory(args.traj_out, _trajectory(args, parser, args.steps, args.seed))
    return 0


def cmd_build_pvd(args, parser) -> int:
    cfg = _kernel(args, parser)
    objs = _objects(args, parser, args.n, args.seed)
    t0 = time.perf_counter()
    if args.dim == 1:
        pvd = prob_voronoi_1d(objs, cfg=cfg)
        stats = f"objects={len(objs)} bisectors={len(pvd.bisectors)}"
    else:
        pvd = prob_voronoi_2d(objs, cfg=cfg).materialize()
        flagged = sum(pb.flagged for pb in pvd.pbrs)
        stats = f"objects={len(objs)} pbrs={len(pvd.edges)} flagged={flagged} dropped={len(pvd.dropped)}"
    elapsed = time.perf_counter() - t0
    out = _open(args.out, sys.stdout)
    try:
        out.write(pvd.dumps())
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"{stats} build_s={elapsed:.3f}", file=sys.stderr)
    return 0


def cmd_run(args, parser) -> int:
    cfg = _kernel(args, parser)
    methods = _methods(args.method, parser)
    _check_run_values(parser, [args.k], [args.buffer_window], args.repetitions)
    objs = _objects(args, parser, args.n, args.seed)
    traj = _trajectory(args, parser, args.steps, args.seed)
    server = Server(objs, cfg)
    meta = dict(dim=args.dim, dist=args.dist, n=len(objs), traj=args.traj, seed=args.seed)
    out = _open(args.out, sys.stdout)
    steps_out = _open(args.steps_out, None)
    try:
        _run_point(_Sink(out, steps_out), server, traj, methods, args.k, args.buffer_window,
                   args.repetitions, meta)
    finally:
        if out is not sys.stdout:
            out.close()
        if steps_out is not None:
            steps_out.close()
    return 0


def cmd_sweep(args, parser) -> int:
    cfg = _kernel(args, parser)
    methods = _methods(args.method, parser)
    try:
        ns, ks, seeds, steps = (_int_list(v) for v in (args.n, args.k, args.seed, args.steps))
        windows = _float_list(args.buffer_window)
    except ValueError as exc:
        parser.error(f"malformed list value: {exc}")
    if not all((ns, ks, seeds, steps, windows)):
        parser.error("every swept flag needs at least one value")
    _check_run_values(parser, ks, windows, args.repetitions)
    out = _open(args.out, sys.stdout)
    steps_out = _open(args.steps_out, None)
    sink = _Sink(out, steps_out)
    try:
        for n, seed in itertools.product(ns, seeds):
            objs = _objects(args, parser, n, seed)
            server = Server(objs, cfg)  # one server (and diagram) per dataset
            meta = dict(dim=args.dim, dist=args.dist, n=len(objs), traj=args.traj, seed=seed)
            for st in steps:
                traj = _trajectory(args, parser, st, seed)
                for method in methods:
                    if method == "naive":
                        grid = [(ks[0], windows[0])]
                    elif method == "ppvd":
                        grid = [(ks[0], w) for w in windows]
                    else:
                        grid = [(k, windows[0]) for k in ks]
                    for k, w in grid:
                        _run_point(sink, server, traj, [method], k, w, args.repetitions, meta)
    finally:
        if out is not sys.stdout:
            out.close()
        if steps_out is not None:
            steps_out.close()
    return 0


COMMANDS: dict[str, Callable] = {"gen": cmd_gen, "build-pvd": cmd_build_pvd,
                                 "run": cmd_run, "sweep": cmd_sweep}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    return COMMANDS[args.command](args, sub)


if __name__ == "__main__":
    sys.exit(main())
