"""Compiled versus numpy cube scan.

    python3 benchmarks/bench_kernels.py [--sizes 12 16 20] [--cuts 30] [--repeat 3]

Both backends are run on the same random master (a few linear rows plus
``--cuts`` affine pieces) and must agree on the argmax before a timing is
reported.
"""

import argparse
import time

import numpy as np

from bincut import _kernels_py, kernels

try:
    from bincut import _kernels
except ImportError:
    _kernels = None


def random_master(n, rows, cuts, seed):
    rng = np.random.default_rng(seed)
    G = rng.integers(0, 10, size=(rows, n)).astype(float)
    h = G.sum(axis=1) // 2
    P = rng.normal(size=(cuts, n))
    p = rng.normal(size=cuts)
    return G, h, P, p


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[12, 16, 20])
    ap.add_argument("--rows", type=int, default=2)
    ap.add_argument("--cuts", type=int, default=30)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    impls = [("python", _kernels_py)] + ([("cython", _kernels)] if _kernels is not None else [])
    if _kernels is None:
        print("compiled extension not built; timing the numpy fallback only")
    print(f"{'n':>4} {'backend':>8} {'ms':>10} {'points/s':>12} {'speedup':>8}")
    for n in args.sizes:
        G, h, P, p = random_master(n, args.rows, args.cuts, seed=n)
        base = None
        ref = None
        for name, impl in impls:
            t, out = best_time(lambda: kernels.scan_max(G, h, P, p, n, impl=impl), args.repeat)
            if ref is None:
                ref = out
            elif out[0] != ref[0] or not np.isclose(out[1], ref[1], rtol=1e-12, atol=1e-12):
                raise SystemExit(f"backends disagree at n={n}: {ref} vs {out}")
            base = base or t
            print(f"{n:>4} {name:>8} {t * 1e3:>10.2f} {2 ** n / t:>12.3g} {base / t:>7.1f}x")


if __name__ == "__main__":
    main()
