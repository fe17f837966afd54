"""Compare the compiled and numpy kernels on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 3]

Each row reports the best wall time over ``--repeat`` runs and checks that
both backends returned the same numbers.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from ftlscan import kernels
from ftlscan.sim import make_generator


def _search(mod, n_runs=200):
    out = []
    for seed in range(n_runs):
        x = np.array([2.0, 1.4, 0.0])
        out.append(mod.run_search(make_generator(seed), x, 1.0, 0.4, 1e-5, kernels.FTL, 0, math.inf, 10**8))
    return out


def _exit(mod, n_paths=2000):
    return mod.exit_paths(make_generator(1), make_generator(2), n_paths, 0.0, 0.25, -0.25, 2.0, 1.0, 1e-5, 10**8)


def _bundle(mod):
    return mod.driftless_paths(make_generator(3), 3, 400_000, 1e-5)


def _stage(mod):
    return mod.integrate_stage(2, 1.0, 1.0, 0.4, 0.0, 1.4, -3.2, 20_000)


CASES = [
    ("run_search: 200 FTL runs, dt=1e-5", _search),
    ("exit_paths: 2000 paths, dt=1e-5", _exit),
    ("driftless_paths: 4e5 steps, N=3", _bundle),
    ("integrate_stage: 2e4 RK4 steps", _stage),
]


def _same(a, b) -> bool:
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    if isinstance(a, (tuple, list)):
        return len(a) == len(b) and all(_same(u, v) for u, v in zip(a, b))
    return a == b


def _best(fn, mod, repeat):
    best, result = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(mod)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    mods = kernels.backends()
    if "cython" not in mods:
        raise SystemExit("compiled extension not available; build with `pip install -e . --no-build-isolation`")
    print(f"{'kernel':40s} {'cython [s]':>11s} {'python [s]':>11s} {'speedup':>8s}  identical")
    for name, fn in CASES:
        tc, rc = _best(fn, mods["cython"], args.repeat)
        tp, rp = _best(fn, mods["python"], args.repeat)
        print(f"{name:40s} {tc:11.4f} {tp:11.4f} {tp / tc:8.1f}  {_same(rc, rp)}")


if __name__ == "__main__":
    main()
