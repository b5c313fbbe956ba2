"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--sizes 4096 65536 1048576] [--repeat 5]

Each kernel runs on the same random inputs under both backends; the
results are checked for equality before timings are reported.
"""
import argparse
import time

import numpy as np

from psn import _kernels_py
from psn.kernels import compiled_backend


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def cases(size, rng):
    table = rng.integers(0, size, size, dtype=np.int64)
    chain = rng.integers(0, size, (8, size), dtype=np.int64)
    # a binary coordinate in the middle of a 2^k domain
    rule = rng.integers(0, 2, size, dtype=np.int64)
    stride = 1 << (int(np.log2(size)) // 2)
    return [
        ("functional_graph", lambda m: m.functional_graph(table)),
        ("apply_chain x8", lambda m: m.apply_chain(chain)),
        ("dependency_witness", lambda m: m.dependency_witness(rule, 2, stride)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1 << 12, 1 << 16, 1 << 20])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if compiled_backend is None:
        print("compiled extension not built; only the fallback can be timed")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<20}{'states':>10}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for size in args.sizes:
        for name, run in cases(size, rng):
            tp, out_p = best_of(lambda: run(_kernels_py), args.repeat)
            if compiled_backend is None:
                print(f"{name:<20}{size:>10}{tp:>12.5f}{'-':>12}{'-':>10}")
                continue
            tc, out_c = best_of(lambda: run(compiled_backend), args.repeat)
            if not same(out_p, out_c):
                raise SystemExit(f"backends disagree on {name} at {size} states")
            print(f"{name:<20}{size:>10}{tp:>12.5f}{tc:>12.5f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
