"""Time the compiled integration kernels against the pure-Python fallback.

Usage: ``python benchmarks/bench_kernels.py [--horizon T] [--repeat N]``.
"""
import argparse
import sys
import timeit

import numpy as np

from cocycle_lab import kernels
from cocycle_lab.baseflow import BasePoint, FlowSpec
from cocycle_lab.kinetic import KineticGenerator, TrigPolynomial
from cocycle_lab.propagator import orbit_grid


def system():
    flow = FlowSpec(dimension=2, frequencies=(1.0, (5 ** 0.5 - 1) / 2))
    alpha = TrigPolynomial(1.0, (((1, 1), 0.4, 0.0),))
    beta = TrigPolynomial(-1.0, (((1, 0), 0.5, 0.0), ((0, 1), 0.0, 0.3)))
    return KineticGenerator(alpha, beta, "dissipative"), flow


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=float, default=20.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.COMPILED is None:
        print("compiled kernels unavailable; build with pip install -e . --no-build-isolation")
        return 1
    A, flow = system()
    g = orbit_grid(A, flow, BasePoint((0.1, 0.2)), 0.0, args.horizon, 1e-3)
    ends = np.arange(1000, g.hs.size + 1, 1000)
    v0 = np.array([1.0, 0.0])
    cases = {
        "matrix_blocks": lambda k: k.matrix_blocks(g.a, g.b, g.hs, ends, 1e12),
        "vector_blocks": lambda k: k.vector_blocks(g.a, g.b, g.hs, ends, v0, 1e12),
        "rotation": lambda k: k.rotation(g.a[:1000], g.b[:1000], g.hs[:1000], 0.1, 1e12),
    }
    print(f"steps: {g.hs.size}, repeat: {args.repeat}")
    print(f"{'kernel':<15}{'cython s':>12}{'python s':>12}{'speedup':>10}")
    for name, fn in cases.items():
        tc = min(timeit.repeat(lambda: fn(kernels.COMPILED), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(kernels.PURE), number=1, repeat=args.repeat))
        print(f"{name:<15}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
