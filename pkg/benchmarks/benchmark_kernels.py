"""Timing comparison of the compiled kernels against the pure fallback.

Run as a script::

    python benchmarks/benchmark_kernels.py [--sizes 64,256,1024] [--repeat 20]

Times the three hot kernels (interaction drift, guarded step acceptance,
compensated reduction) through both backends and prints a small table.
If the compiled extension is unavailable the script still runs, timing
the fallback against itself, and says so.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rmtlab._kernels import pure

try:
    from rmtlab._kernels import _core as compiled
except ImportError:
    compiled = None


def _time(fn, *args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(sizes, repeat: int) -> None:
    rng = np.random.default_rng(7)
    backends = [("pure", pure)]
    if compiled is not None:
        backends.append(("compiled", compiled))
    else:
        print("compiled extension not importable; timing the fallback only")

    header = f"{'kernel':<22}{'n':>8}" + "".join(f"{name:>14}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for n in sizes:
        points = np.sort(rng.uniform(0.1, 3.0, size=n))
        incs = rng.normal(size=n) * 1e-4
        values = rng.normal(size=n * 8)

        cases = [
            ("dbm_drift_kernel", (points,)),
            ("attempt_step_kernel", (points, incs, 1e-6)),
            ("pairwise_sum", (values,)),
        ]
        for kernel, args in cases:
            times = [_time(getattr(mod, kernel), *args, repeat=repeat)
                     for _, mod in backends]
            row = f"{kernel:<22}{n:>8}" + "".join(f"{t * 1e6:>12.1f}us" for t in times)
            if len(times) == 2 and times[1] > 0:
                row += f"{times[0] / times[1]:>9.2f}x"
            print(row)

    if compiled is not None:
        pts = np.sort(rng.uniform(0.1, 3.0, size=sizes[-1]))
        drift_gap = np.max(np.abs(pure.dbm_drift_kernel(pts)
                                  - compiled.dbm_drift_kernel(pts)))
        print(f"\nmax |pure - compiled| drift deviation: {drift_gap:.3e}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="64,256,1024")
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    bench([int(s) for s in args.sizes.split(",")], args.repeat)


if __name__ == "__main__":
    main()
