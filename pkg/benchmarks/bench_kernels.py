"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from swisenet import _kernels_np

try:
    from swisenet import _ckernels
except ImportError:
    _ckernels = None

CASES = [
    ("stem conv 7x7/s2, 64px", (2, 64, 64, 3), (7, 7, 3, 16), 2),
    ("block conv 3x3/s1, 32px", (2, 32, 32, 16), (3, 3, 16, 16), 1),
    ("block conv 3x3/s1, 74px", (1, 74, 74, 32), (3, 3, 32, 32), 1),
]

POOL_CASES = [
    ("maxpool 3/s2, 150px", (1, 150, 150, 16), 3, 2),
    ("maxpool 2/s2, 64px", (2, 64, 64, 32), 2, 2),
]


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_conv(impl, x, k, stride, repeats):
    pad = k.shape[0] // 2
    fwd = timeit(lambda: impl.conv2d_forward(x, k, stride, pad, pad, pad, pad),
                 repeats)
    y = impl.conv2d_forward(x, k, stride, pad, pad, pad, pad)
    gy = np.ones_like(y)
    bwd = timeit(
        lambda: impl.conv2d_backward(x, k, gy, stride, pad, pad, pad, pad),
        repeats,
    )
    return fwd, bwd


def bench_pool(impl, x, pool, stride, repeats):
    fwd = timeit(lambda: impl.maxpool_forward(x, pool, stride), repeats)
    y, arg = impl.maxpool_forward(x, pool, stride)
    gy = np.ones_like(y)
    bwd = timeit(lambda: impl.maxpool_backward(x.shape, arg, gy, pool, stride),
                 repeats)
    return fwd, bwd


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled extension not available; showing numpy only")
    rng = np.random.default_rng(0)
    header = f"{'case':<28}{'numpy fwd':>12}{'numpy bwd':>12}"
    if _ckernels is not None:
        header += f"{'cython fwd':>12}{'cython bwd':>12}{'speedup':>9}"
    print(header)
    for name, xs, ks, stride in CASES:
        x = rng.standard_normal(xs).astype(np.float32)
        k = rng.standard_normal(ks).astype(np.float32)
        nf, nb = bench_conv(_kernels_np, x, k, stride, args.repeats)
        line = f"{name:<28}{nf * 1e3:>10.2f}ms{nb * 1e3:>10.2f}ms"
        if _ckernels is not None:
            cf, cb = bench_conv(_ckernels, x, k, stride, args.repeats)
            line += (f"{cf * 1e3:>10.2f}ms{cb * 1e3:>10.2f}ms"
                     f"{(nf + nb) / (cf + cb):>8.1f}x")
        print(line)
    for name, xs, pool, stride in POOL_CASES:
        x = rng.standard_normal(xs).astype(np.float32)
        nf, nb = bench_pool(_kernels_np, x, pool, stride, args.repeats)
        line = f"{name:<28}{nf * 1e3:>10.2f}ms{nb * 1e3:>10.2f}ms"
        if _ckernels is not None:
            cf, cb = bench_pool(_ckernels, x, pool, stride, args.repeats)
            line += (f"{cf * 1e3:>10.2f}ms{cb * 1e3:>10.2f}ms"
                     f"{(nf + nb) / (cf + cb):>8.1f}x")
        print(line)


if __name__ == "__main__":
    main()
