"""Timing of the GL history convolution: compiled kernel versus numpy fallback.

Usage::

    python benchmarks/bench_glkernel.py [--repeat 5]

Each row runs the transition recursion (width n) for ``kmax`` steps with
both backends, checks that they agree and prints the best-of-``repeat``
wall time.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from fracdisc import _kernels
from fracdisc.gl import gl_coefficients

CASES = [(2, 200), (2, 1000), (2, 4000), (4, 1000), (8, 1000), (8, 4000)]


def make_inputs(n: int, kmax: int, alpha: float = 1 / 3, delta: float = 0.01):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((n, n))
    a *= 1.0 / max(abs(np.linalg.eigvals(a)))
    lead = (a * delta**alpha + alpha * np.eye(n)).astype(np.complex128)
    coeffs = gl_coefficients(alpha, kmax).values
    return lead, coeffs, np.eye(n, dtype=np.complex128)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _kernels.gl_recurrence_compiled is None:
        print("compiled kernel not built; reinstall with Cython available", file=sys.stderr)
        return 1
    print(f"{'n':>3} {'kmax':>6} {'python [s]':>12} {'cython [s]':>12} {'speedup':>8} {'max |diff|':>11}")
    for n, kmax in CASES:
        lead, coeffs, x0 = make_inputs(n, kmax)
        fast = _kernels._compiled(lead, coeffs, x0, kmax)
        slow = _kernels.gl_recurrence_py(lead, coeffs, x0, kmax)
        diff = float(np.max(np.abs(fast - slow)))
        t_py = min(timeit.repeat(lambda: _kernels.gl_recurrence_py(lead, coeffs, x0, kmax),
                                 number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: _kernels._compiled(lead, coeffs, x0, kmax),
                                 number=1, repeat=args.repeat))
        print(f"{n:>3} {kmax:>6} {t_py:>12.5f} {t_cy:>12.5f} {t_py / t_cy:>7.1f}x {diff:>11.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
