#!/usr/bin/env python3
"""Time the numba and pure-numpy paths against each other.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeat 5]

Three sections:

1. inversion counting (the core of Kendall's tau), both implementations;
2. the fusion kernels as shipped (numpy) next to a jitted scalar loop over
   libm, which is what motivated keeping them in numpy;
3. one full nested fusion of a 6 x 1000 synthetic query, run in a fresh
   interpreter per backend so the environment flag takes effect.
"""

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from nestfuse import _accel

PIPELINE = """
import time
from nestfuse import _accel
from nestfuse.marginals import universe_marginals
from nestfuse.nested import QueryContext, nested_fuse
from nestfuse.runs import build_universe
from nestfuse.synthetic import make_collection

coll = make_collection(n_systems=6, n_queries=1, depth=1000, seed=3)
qid = coll.runs[0].query_ids[0]
tables = universe_marginals(build_universe(coll.runs, qid))
ctx = QueryContext.from_maps(qid, coll.queries, coll.term_matches)
nested_fuse(tables, "el", ctx)
best = float("inf")
for _ in range({repeat}):
    start = time.perf_counter()
    nested_fuse(tables, "el", ctx)
    best = min(best, time.perf_counter() - start)
print(_accel.backend(), best)
"""


def best_of(fn, repeat):
    fn()  # warm-up, also triggers jit compilation
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def jitted_power_kernel():
    import numba

    @numba.njit(cache=True)
    def loop(u, v, tg, tp, out):
        for i in range(u.shape[0]):
            a = -tp[i] * math.log(u[i])
            b = -tp[i] * math.log(v[i])
            top = max(a, b)
            if top <= 30.0:
                s = math.log1p(math.expm1(a) + math.expm1(b))
            else:
                s = top + math.log(math.exp(a - top) + math.exp(b - top) - math.exp(-top))
            out[i] = math.exp(-s / tg)

    def kernel(u, v, tg, tp):
        out = np.empty_like(u)
        loop(u, v, tg, tp, out)
        return out

    return kernel


def row(name, size, npy, nb):
    cells = [f"{t * 1e3:12.3f}" if t is not None else f"{'-':>12}" for t in (npy, nb)]
    speedup = f"{npy / nb:9.2f}x" if npy and nb else f"{'-':>10}"
    print(f"{name:<26}{size:>10}{cells[0]}{cells[1]}{speedup}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    print(f"active backend: {_accel.backend()}  (numba installed: {_accel.HAS_NUMBA})")
    print(f"{'benchmark':<26}{'size':>10}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")

    for m in (1_000, 10_000, 100_000):
        a = rng.permutation(m)
        npy = best_of(lambda: _accel._count_inversions_numpy(a), args.repeat)
        nb = best_of(lambda: _accel._count_inversions_numba(a), args.repeat) if _accel.HAS_NUMBA else None
        row("count_inversions", m, npy, nb)

    jitted = jitted_power_kernel() if _accel.HAS_NUMBA else None
    for m in (1_000, 100_000, 1_000_000):
        u, v = rng.uniform(1e-6, 1 - 1e-6, (2, m))
        tp = rng.uniform(1e-3, 5.0, m)
        npy = best_of(lambda: _accel.power_kernel(u, v, 5.0, tp), args.repeat)
        nb = best_of(lambda: jitted(u, v, 5.0, tp), args.repeat) if jitted else None
        row("power_kernel", m, npy, nb)

    times = {}
    for flag in ("1", "0"):
        env = dict(os.environ, **{_accel.ENV_FLAG: flag})
        proc = subprocess.run([sys.executable, "-c", PIPELINE.format(repeat=args.repeat)],
                              env=env, capture_output=True, text=True, check=True)
        name, seconds = proc.stdout.split()
        times[name] = float(seconds)
    row("nested_fuse el, 6 lists", 1300, times.get("numpy"), times.get("numba"))


if __name__ == "__main__":
    main()
