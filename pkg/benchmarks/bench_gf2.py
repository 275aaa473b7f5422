"""Time GF(2) row reduction: compiled kernel against the pure-Python fallback.

    python benchmarks/bench_gf2.py [--repeat 5] [--sizes 32 128 512]

Both kernels are checked to agree on every matrix before timing.
"""

import argparse
import time

import numpy as np

from sheaflens import gf2


def best_of(fn, mat, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(mat)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128, 256, 512])
    ap.add_argument("--density", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if gf2.rref_compiled is None:
        print("compiled kernel not built; only the fallback is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>6} {'python (ms)':>12} {'compiled (ms)':>14} {'speedup':>8}")
    for n in args.sizes:
        mat = (rng.random((n, n)) < args.density).astype(np.uint8)
        t_py = best_of(gf2.rref_python, mat, args.repeat)
        if gf2.rref_compiled is None:
            print(f"{n:>6} {t_py * 1e3:>12.3f} {'-':>14} {'-':>8}")
            continue
        r1, p1 = gf2.rref_python(mat)
        r2, p2 = gf2.rref_compiled(mat)
        if list(p1) != list(p2) or not np.array_equal(np.asarray(r1), np.asarray(r2)):
            raise SystemExit(f"kernels disagree at n={n}")
        t_c = best_of(gf2.rref_compiled, mat, args.repeat)
        print(f"{n:>6} {t_py * 1e3:>12.3f} {t_c * 1e3:>14.3f} {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
