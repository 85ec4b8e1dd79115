"""Compare the compiled and pure-Python simulation kernels.

    python3 benchmarks/bench_kernels.py [--scale 1.0]

Each kernel runs on the same Philox stream under both backends; the outputs
must match exactly, and the table reports wall time and the speedup.
"""

import argparse
import time

import numpy as np

from sieve_lab import parse_law
from sieve_lab._core import BACKENDS
from sieve_lab._params import DEFAULT_ATTEMPTS

CASES = [
    # (label, law, kernel, grid, args)
    ("sieve n=1000", "uniform", "sieve_chains", False, (1000, 2000)),
    ("sieve n=1000", "heavy:1", "sieve_chains", False, (1000, 500)),
    ("sieve n=10^5", "beta-theta:2", "sieve_chains", False, (100_000, 5000)),
    ("limit Z depth=4", "uniform", "limit_z", True, (4, 20_000, DEFAULT_ATTEMPTS)),
    ("limit Z depth=4", "mixture:0.3*beta:1,1+0.7*beta:2,1", "limit_z", True,
     (4, 20_000, DEFAULT_ATTEMPTS)),
    ("limit K_r r_max=3", "uniform", "limit_kr", True,
     (3, 2000, 12, 4.0, 10**7, DEFAULT_ATTEMPTS)),
]


def scaled(args, scale):
    # the replicate count is the second argument of every kernel
    args = list(args)
    args[1] = max(1, int(args[1] * scale))
    return tuple(args)


def timed(fn, *args):
    start = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - start, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=float, default=1.0, help="multiply replicate counts")
    args = parser.parse_args()
    if "cython" not in BACKENDS:
        raise SystemExit("compiled extension not built; run pip install -e . first")
    print(f"{'case':<20} {'law':<36} {'cython s':>9} {'python s':>9} {'speedup':>8}  match")
    for label, spec, kernel, grid, kargs in CASES:
        klaw = parse_law(spec).kernel_law(grid=grid)
        kargs = scaled(kargs, args.scale)
        times = {}
        outs = {}
        for name in ("cython", "python"):
            rng = np.random.Generator(np.random.Philox(2024))
            times[name], outs[name] = timed(getattr(BACKENDS[name], kernel), klaw, *kargs, rng)
        ok = same(outs["cython"], outs["python"])
        speedup = times["python"] / times["cython"]
        print(f"{label:<20} {spec:<36} {times['cython']:9.3f} {times['python']:9.3f} "
              f"{speedup:7.1f}x  {'yes' if ok else 'NO'}")


if __name__ == "__main__":
    main()
