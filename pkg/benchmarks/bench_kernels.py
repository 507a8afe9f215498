"""Compiled vs pure-Python kernels.

    python benchmarks/bench_kernels.py [--levels 3 4 5] [--repeat 3]

Times the systole search (band sources) per mesh level and the harmonic
series on 20k points, for each backend, and checks the results agree.
"""
import argparse
import time

import numpy as np

from systolab import kernels
from systolab.conformal import _recurrence_tables, random_even_factor
from systolab.systole import build_mesh, compute_systole, weight_edges


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, nargs="+", default=[3, 4, 5])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = ["python"]
    try:
        kernels.backend_module("compiled")
        backends.insert(0, "compiled")
    except ImportError:
        print("compiled extension not built; timing the Python backend only")

    f = random_even_factor(1, 8, 0.4)
    print(f"{'kernel':<22}{'size':>10}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for level in args.levels:
        wm = weight_edges(build_mesh(level), f)
        row, results = [], []
        for b in backends:
            t, res = best_of(lambda: compute_systole(wm, backend=b), args.repeat)
            row.append(t)
            results.append(res.L)
        assert len(set(results)) == 1, results
        _print("systole (band)", f"level {level}", row)

    pts = np.random.default_rng(0).normal(size=(20_000, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    c, s = f.rep.tables
    tabs = (c, s, *_recurrence_tables(c.shape[0] - 1))
    row, results = [], []
    for b in backends:
        t, out = best_of(lambda: kernels.backend_module(b).sh_series(pts, *tabs), args.repeat)
        row.append(t)
        results.append(out)
    assert np.allclose(results[0], results[-1], rtol=0, atol=1e-13)
    _print("harmonic series d=8", "20k pts", row)


def _print(name, size, row):
    speed = f"{row[-1] / row[0]:>9.1f}x" if len(row) > 1 else ""
    print(f"{name:<22}{size:>10}" + "".join(f"{t:>11.4f}s" for t in row) + speed)


if __name__ == "__main__":
    main()
