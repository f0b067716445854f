"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from lipext import DirectionSpec, GridField, _pykernels, build_graph

try:
    from lipext import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    X = rng.standard_normal((400, 3))
    U = rng.standard_normal((400, 2))
    C = rng.uniform(-1, 1, (6, 2))
    r2 = rng.uniform(0.3, 1.0, 6)
    field = GridField.from_function((64, 64), 1.0, (0.0, 0.0),
                                    lambda P: np.stack([0.5 * P[:, 0], 0.3 * P[:, 1]], 1))
    g = build_graph(field, DirectionSpec([1.0, 0.0]))
    C3 = rng.standard_normal((12, 3))
    r3 = rng.uniform(0.5, 2.0, 12)
    return {
        "max_pair_ratio (400 pts)": lambda k: k.max_pair_ratio(X, U),
        "grid_min (1000x1000 grid)": lambda k: k.grid_min(C, r2, np.array([-2.0, -2.0]), 4e-3,
                                                          np.array([1000, 1000])),
        "dijkstra (64x64 grid)": lambda k: k.dijkstra(g.indptr, g.indices, g.weights, 0, None),
        "polyak_warm_start (12 balls, 64 it)": lambda k: k.polyak_warm_start(C3, r3,
                                                                              np.zeros(3), 64),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", help="write the timings to this file")
    args = p.parse_args(argv)
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    rows = []
    for name, fn in cases(np.random.default_rng(0)).items():
        times = {}
        for bname, k in backends.items():
            fn(k)  # warm up
            times[bname] = min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat))
        rows.append({"kernel": name, **times})
    header = f"{'kernel':38s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}"
    print(header)
    for r in rows:
        line = f"{r['kernel']:38s}" + "".join(f"{r[b] * 1e3:10.2f}ms" for b in backends)
        if "cython" in r:
            line += f"{r['python'] / r['cython']:9.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
