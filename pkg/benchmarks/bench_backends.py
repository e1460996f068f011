"""Time the compiled kernels against the pure reference kernels.

Usage::

    python benchmarks/bench_backends.py [--replicas 200] [--repeat 3]

Each case runs the same arguments through both backends, checks that the
outputs are identical and reports the best wall-clock time of ``--repeat``
runs.
"""

import argparse
import time

import numpy as np

from tcptree import _backend
from tcptree.topology import Ball, TreeTopology, Variant, compile_region


def _graph(reg):
    return (reg.nbr_ptr, reg.nbr_idx, reg.rev_ptr, reg.rev_idx, reg.n_boundary)


def cases(replicas):
    reg = compile_region(TreeTopology(2, truncation=Ball(7)))
    frozen = np.full(len(reg), -1, dtype=np.int8)
    st = np.linspace(0.0, 3.0, 7)
    obs = np.zeros(1, dtype=np.int64)
    yield ("simulate b=2 ball(7) lam=2 t=3", "simulate",
           (*_graph(reg), 0, 0, 2, 3.0, frozen, 0.6, 1, 0, replicas, 3.0, 1.0, 2.0, 1.0, st, obs))
    ore = compile_region(TreeTopology(3, Variant.ORIENTED_FORWARD, Ball(5)))
    fz = np.full(len(ore), -1, dtype=np.int8)
    yield ("simulate oriented b=3 depth 5 lam=4 t=1", "simulate",
           (*_graph(ore), 1, 0, 2, 3.0, fz, 0.8, 1, 0, replicas, 1.0, 1.0, 4.0, 1.0, st / 3, obs))
    fwd = compile_region(TreeTopology(3, Variant.FORWARD, Ball(6)))
    yield ("bootstrap_mc forward b=3 depth 6", "bootstrap_mc",
           (*_graph(fwd), 0, 2, 0.3, 1, 0, 20 * replicas, 6, obs, -1, fwd.adj_ptr, fwd.adj_idx, fwd.dist))


def best_of(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicas", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _backend.compiled is None:
        raise SystemExit("compiled extension is not available; build with pip install -e .")
    print(f"{'case':44s} {'pure [s]':>10s} {'compiled [s]':>13s} {'speedup':>8s}")
    for name, fn, a in cases(args.replicas):
        tp, op = best_of(getattr(_backend.pure, fn), a, args.repeat)
        tc, oc = best_of(getattr(_backend.compiled, fn), a, args.repeat)
        same = all(np.array_equal(x, y) for x, y in zip(op, oc))
        print(f"{name:44s} {tp:10.3f} {tc:13.4f} {tp / tc:8.1f}{'' if same else '  OUTPUT MISMATCH'}")


if __name__ == "__main__":
    main()
