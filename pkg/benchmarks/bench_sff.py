"""Benchmark the trace-power kernel: numba fast path vs. pure-numpy fallback.

The kernel is the only hot loop in the package (everything else is dominated
by LAPACK factorizations).  Run with::

    python3 benchmarks/bench_sff.py [--samples N] [--t-max T]

Both backends are imported in-process (the numpy reference is always
available; the numba path is active unless WALLKIT_BACKEND=numpy).
"""

import argparse
import time

import numpy as np

from wallkit._kernels import NUMBA_ENABLED, _trace_powers_numpy, trace_powers


def _workload(samples, sizes, rng):
    n = sum(sizes)
    eigs = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(samples, n)))
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    return eigs, offsets


def _time(fn, *args, repeats=5):
    fn(*args)  # warm-up (includes jit compilation for the numba path)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--t-max", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    # blocks typical of a two-central-qubit wall: (T, R) sizes per block
    sizes = (4, 4, 4, 4)
    eigs, offsets = _workload(args.samples, sizes, rng)

    t_np = _time(_trace_powers_numpy, eigs, offsets, args.t_max)
    print(f"numpy fallback : {t_np * 1e3:8.2f} ms")
    if NUMBA_ENABLED:
        t_nb = _time(trace_powers, eigs, offsets, args.t_max)
        a = trace_powers(eigs, offsets, args.t_max)
        b = _trace_powers_numpy(eigs, offsets, args.t_max)
        rel = np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))
        print(f"numba kernel   : {t_nb * 1e3:8.2f} ms")
        print(f"speedup        : {t_np / t_nb:8.2f}x")
        print(f"max rel diff   : {rel:.2e}")
    else:
        print("numba inactive (WALLKIT_BACKEND=numpy or import failure)")


if __name__ == "__main__":
    main()
