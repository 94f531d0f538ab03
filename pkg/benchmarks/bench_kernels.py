"""Time the numba and numpy CNN kernels side by side.

    python3 benchmarks/bench_kernels.py [--batch 100] [--n-prime 128] [--m-prime 32] [--repeat 5]

Both backends are always importable (``*_nb`` / ``*_np``), so one process can
time them without toggling ``ISAC_WEATHER_NUMBA``. The first numba call
(compilation or cache load) is excluded.
"""

import argparse
import time

import numpy as np

from isac_weather._accel import HAS_NUMBA
from isac_weather.nn import kernels


def _best(fn, repeat):
    fn()  # warm up / compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(B, n, m):
    rng = np.random.default_rng(0)
    x1 = rng.standard_normal((B, 4, n, m))
    w1 = rng.standard_normal((8, 4, 3, 3))
    x2 = rng.standard_normal((B, 8, n // 2, m // 2))
    w2 = rng.standard_normal((16, 8, 3, 3))
    b8, b16 = np.zeros(8), np.zeros(16)
    dy1 = rng.standard_normal((B, 8, n, m))
    dy2 = rng.standard_normal((B, 16, n // 2, m // 2))
    _, arg = kernels.maxpool2_forward_np(dy1)
    dp = rng.standard_normal((B, 8, n // 2, m // 2))
    return {
        "conv1 forward": lambda s: getattr(kernels, "conv2d_forward" + s)(x1, w1, b8),
        "conv1 backward": lambda s: getattr(kernels, "conv2d_backward" + s)(x1, w1, dy1),
        "conv2 forward": lambda s: getattr(kernels, "conv2d_forward" + s)(x2, w2, b16),
        "conv2 backward": lambda s: getattr(kernels, "conv2d_backward" + s)(x2, w2, dy2),
        "maxpool forward": lambda s: getattr(kernels, "maxpool2_forward" + s)(dy1),
        "maxpool backward": lambda s: getattr(kernels, "maxpool2_backward" + s)(dp, arg, n, m),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--batch", type=int, default=100)
    ap.add_argument("--n-prime", type=int, default=128)
    ap.add_argument("--m-prime", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAS_NUMBA:
        print("numba not installed; the *_nb kernels run as plain Python and are not timed")
    print(f"batch={args.batch} input={args.n_prime}x{args.m_prime}x4 float64, best of {args.repeat}")
    print(f"{'kernel':<18}{'numpy ms':>10}{'numba ms':>10}{'ratio':>8}")
    for name, fn in cases(args.batch, args.n_prime, args.m_prime).items():
        t_np = _best(lambda: fn("_np"), args.repeat) * 1e3
        if HAS_NUMBA:
            t_nb = _best(lambda: fn("_nb"), args.repeat) * 1e3
            print(f"{name:<18}{t_np:>10.1f}{t_nb:>10.1f}{t_np / t_nb:>8.2f}")
        else:
            print(f"{name:<18}{t_np:>10.1f}{'-':>10}{'-':>8}")


if __name__ == "__main__":
    main()
