"""Time the compiled clustering kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 2000] [--d 64] [--k 10] [--repeat 3]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from codeedit.cluster import _kernels_py

try:
    from codeedit.cluster import _kernels
except ImportError:
    _kernels = None


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=int, default=64)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    X = rng.normal(size=(args.n, args.d))
    C = X[rng.choice(args.n, args.k, replace=False)].copy()
    labels = rng.integers(0, args.k, args.n).astype(np.int64)

    backends = [("python", _kernels_py)] + ([("compiled", _kernels)] if _kernels else [])
    if _kernels is None:
        print("compiled extension not built; timing the fallback only")
    print(f"n={args.n} d={args.d} k={args.k}, best of {args.repeat}")
    results = {}
    for name, mod in backends:
        t_assign = min(timeit.repeat(lambda: mod.assign_labels(X, C), number=1, repeat=args.repeat))
        t_sil = min(timeit.repeat(lambda: mod.silhouette_samples(X, labels, args.k), number=1,
                                  repeat=args.repeat))
        results[name] = (t_assign, t_sil)
        print(f"{name:<9} assign_labels {1e3 * t_assign:9.2f} ms   silhouette {1e3 * t_sil:9.2f} ms")
    if len(results) == 2:
        pa, ps = results["python"]
        ca, cs = results["compiled"]
        print(f"speedup   assign_labels {pa / ca:8.2f}x      silhouette {ps / cs:8.2f}x")
        s_py = _kernels_py.silhouette_samples(X, labels, args.k)
        s_c = _kernels.silhouette_samples(X, labels, args.k)
        print(f"max |difference| in silhouette values: {np.abs(s_py - s_c).max():.2e}")


if __name__ == "__main__":
    main()
