"""Compiled vs pure-numpy kernels: wall time and agreement.

Usage: python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from qmegs import _backend, _fallback

try:
    from qmegs import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rng):
    # qmegs filter grid at T = 3200, q = 0.05 with N = 500 shots
    t = rng.normal(0, 3200, 500)
    t[np.abs(t) > 3200] = 0.0
    z = rng.choice([-1.0, 1.0], 500) + 1j * rng.choice([-1.0, 1.0], 500)
    J = int(np.floor(2 * np.pi * 3200 / 0.05))
    yield "filter_sum N=500 J=402k", (t, z, -np.pi, 0.05 / 3200, J + 1), lambda a, b: np.max(np.abs(a - b))

    A = rng.standard_normal((128, 128))
    A = A + A.T
    yield "jacobi_eig dim=128", (A, 1e-12 * np.linalg.norm(A), 50), \
        lambda a, b: np.max(np.abs(np.sort(a[0]) - np.sort(b[0])))

    h = rng.standard_normal(3199) + 1j * rng.standard_normal(3199)
    X = rng.standard_normal((1600, 8)) + 1j * rng.standard_normal((1600, 8))
    yield "hankel_matmat 1600x1600 b=8", (h, X, 1600, 1600, False), lambda a, b: np.max(np.abs(a - b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"import-time backend: {_backend.name()}")
    if _kernels is None:
        print("compiled extension not built; only the fallback can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'compiled [s]':>13s} {'numpy [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, call_args, diff in cases(rng):
        kname = name.split()[0]
        tp, outp = best_of(lambda: getattr(_fallback, kname)(*call_args), args.repeat)
        if _kernels is None:
            print(f"{name:32s} {'-':>13s} {tp:11.3f}")
            continue
        tc, outc = best_of(lambda: getattr(_kernels, kname)(*call_args), args.repeat)
        print(f"{name:32s} {tc:13.3f} {tp:11.3f} {tp / tc:8.1f} {diff(outc, outp):10.2e}")


if __name__ == "__main__":
    main()
