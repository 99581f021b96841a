"""Compare the numba-compiled loop kernels with their vectorized numpy twins.

    python3 benchmarks/bench_kernels.py [--pieces 50] [--rows 200] [--repeat 5]

Timings are best-of-``repeat`` after one warm-up call, so JIT compilation is
excluded. Both versions must agree to 1e-9 relative or the script fails.
"""
import argparse
import time

import numpy as np

from histreg import Histogram, load_blood, fit_model
from histreg import _accel, kernels


def random_qf(rng, pieces):
    edges = np.sort(rng.normal(size=pieces + 1) * rng.uniform(0.5, 3.0)) + rng.normal() * 5
    w = rng.uniform(0.1, 1.0, pieces)
    return Histogram(edges[:-1], edges[1:], w / w.sum()).quantile_function


def best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pieces", type=int, default=50)
    ap.add_argument("--rows", type=int, default=200)
    ap.add_argument("--cols", type=int, default=4)
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    f, g = random_qf(rng, args.pieces), random_qf(rng, args.pieces + 7)
    n, m = args.rows, args.cols
    a = kernels.pack(random_qf(rng, args.pieces) for _ in range(n * m))
    u = rng.random(args.samples)

    cases = {
        "merge_integral": (
            lambda: kernels.merge_integral_loop(f.t, f.start, f.end, g.t, g.start, g.end, kernels.SQDIFF),
            lambda: kernels.merge_integral_numpy(f.t, f.start, f.end, g.t, g.start, g.end, kernels.SQDIFF),
        ),
        f"gram {n}x{m}": (
            lambda: kernels.gram_loop(*a, *a, n, m, m, kernels.PRODUCT),
            lambda: kernels.gram_numpy(*a, *a, n, m, m, kernels.PRODUCT),
        ),
        f"sample {args.samples}": (
            lambda: kernels.sample_loop(f.t, f.start, f.end, u),
            lambda: kernels.sample_numpy(f.t, f.start, f.end, u),
        ),
    }
    print(f"{'kernel':<22}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, (loop, vec) in cases.items():
        ra, rb = np.asarray(loop()), np.asarray(vec())
        if not np.allclose(ra, rb, rtol=1e-9, atol=1e-12):
            raise SystemExit(f"{name}: loop and numpy kernels disagree")
        tl, tv = best(loop, args.repeat), best(vec, args.repeat)
        print(f"{name:<22}{tl * 1e3:>10.3f}ms{tv * 1e3:>10.3f}ms{tv / tl:>9.1f}x")

    blood = load_blood()
    for kind in ("iv", "db", "bd"):
        t = best(lambda: fit_model(blood, kind), args.repeat)
        print(f"{'blood fit ' + kind:<22}{t * 1e3:>10.3f}ms  (active path: {'numba' if _accel.ENABLE_NUMBA else 'numpy'})")


if __name__ == "__main__":
    main()
