"""Compare the compiled and numpy enumeration backends.

    python benchmarks/bench_enumeration.py [--repeat 3] [--quick]

For each case both backends run the same branch-and-bound (and, with
``--no-prune``, a full scan) and must agree on the minimum and on the
minimizer set. Reports the median wall time per backend and the speed-up.
"""

import argparse
import statistics
import sys
import time

import numpy as np

from belltight.classical import n_compositions, run_kernel
from belltight.core import Scenario
from belltight.kernels import available_backends

CASES = [
    ("m2 N=12 family", 12, (1, -1, 1, 1, 1)),
    ("m2 N=40", 40, (4, -2, 3, 2, 1)),
    ("m3 N=10", 10, (2, 1, 2, 1, 1, 1, 0, -1, 1)),
    ("m3 N=20", 20, (694, 0, -694, 385, 309, 385, 248, 309, 385)),
    ("m3 N=30 random", 30, None),
]


def _timed(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="only the two smallest cases")
    ap.add_argument("--no-prune", action="store_true", help="also time the exhaustive scan")
    args = ap.parse_args(argv)

    if "compiled" not in available_backends():
        print("compiled backend not built; nothing to compare", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    cases = CASES[:2] if args.quick else CASES
    modes = [True, False] if args.no_prune else [True]
    print(f"{'case':<18}{'prune':>6}{'leaves':>12}{'compiled s':>12}{'python s':>11}{'speed-up':>10}")
    ok = True
    for name, N, alpha in cases:
        if alpha is None:
            alpha = rng.integers(-5, 6, size=9)
        alpha = np.asarray(alpha, dtype=np.int64)
        m = 2 if alpha.shape[0] == 5 else 3
        sc = Scenario(N, m)
        for prune in modes:
            res = {}
            for backend in ("compiled", "python"):
                res[backend] = _timed(
                    lambda: run_kernel(alpha, sc, threads=1, backend=backend, prune=prune),
                    args.repeat)
            (tc, rc), (tp, rp) = res["compiled"], res["python"]
            agree = rc[0] == rp[0] and np.array_equal(rc[1], rp[1])
            ok &= agree
            leaves = rc[2] if prune else n_compositions(N, m)
            flag = "" if agree else "  MISMATCH"
            print(f"{name:<18}{str(prune):>6}{leaves:>12}{tc:>12.4f}{tp:>11.4f}{tp / tc:>9.1f}x{flag}")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
