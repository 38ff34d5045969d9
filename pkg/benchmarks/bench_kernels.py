"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--size 7380] [--parties 8] [--repeat 5]

Times the raw kernels on Mersenne-61 operands plus the two hot paths built
on them: Shamir sharing (Vandermonde matmul) and a row-wise field sum.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mpcfl import _kernels
from mpcfl.field import DEFAULT_PARAMS, party_stream, sample_uniform
from mpcfl.sharing import _vandermonde


def _best(fn, repeat):
    fn()  # warm-up, also triggers numba compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(size, parties):
    q = DEFAULT_PARAMS.q_prime
    a = sample_uniform(party_stream(1, 0, "bench"), DEFAULT_PARAMS, size)
    b = sample_uniform(party_stream(1, 1, "bench"), DEFAULT_PARAMS, size)
    rows = sample_uniform(party_stream(1, 2, "bench"), DEFAULT_PARAMS, (parties, size))
    vand = _vandermonde(tuple(range(1, parties + 1)), parties - 1, q)
    return {
        "addmod": lambda k: k.addmod(a, b, q),
        "mulmod": lambda k: k.mulmod(a, b, q),
        "sum_rows": lambda k: k.sum_rows(rows, q),
        "shamir share (matmul)": lambda k: k.matmul_mod(vand, rows, q),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=7380, help="tensor length (7380 = hidden-layer model)")
    ap.add_argument("--parties", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = [b for b in (_kernels.numpy_backend, _kernels.numba_backend) if b is not None]
    print(f"size={args.size} parties={args.parties} best of {args.repeat}")
    print(f"{'kernel':<24}" + "".join(f"{b.name + ' ms':>14}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases(args.size, args.parties).items():
        ref = fn(backends[0])
        for b in backends[1:]:
            assert np.array_equal(ref, fn(b)), f"{name}: backends disagree"
        t = [_best(lambda: fn(b), args.repeat) * 1e3 for b in backends]
        speed = f"{t[0] / t[-1]:>9.1f}x" if len(t) > 1 else f"{'n/a':>10}"
        print(f"{name:<24}" + "".join(f"{v:>14.3f}" for v in t) + speed)


if __name__ == "__main__":
    main()
