"""Compiled versus numpy polar pair-term kernels.

    python benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--repeat 20] [--solve]

Prints the best-of-``repeat`` time per call for each backend and the
speed-up.  ``--solve`` also times a full ACP solve of the bundled 118-bus
case under each backend (each in a fresh interpreter, since the backend is
fixed at import).
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from itdopf import _kernels_py

try:
    from itdopf import _kernels as _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None

SOLVE_SNIPPET = (
    "import time\n"
    "from itdopf import kernels\n"
    "from itdopf.problems import bundled_case, solve_opfitd\n"
    "case = bundled_case('case118_ieee4x5')\n"
    "best = min(solve_opfitd(case, 'acp-acpu').seconds for _ in range(3))\n"
    "print(kernels.BACKEND, best)\n"
)


def inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    vm_a = rng.uniform(0.9, 1.1, n)
    vm_c = rng.uniform(0.9, 1.1, n)
    va_a = rng.uniform(-0.5, 0.5, n)
    va_c = rng.uniform(-0.5, 0.5, n)
    cx = rng.normal(size=n)
    cw = rng.normal(size=n)
    weight = rng.normal(size=n)
    return vm_a, va_a, vm_c, va_c, cx, cw, weight


def best_time(fn, repeat):
    fn()  # warm-up
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(sizes, repeat):
    print(f"{'n':>8s} {'kernel':<6s} {'python s':>11s} {'cython s':>11s} {'speed-up':>9s}")
    for n in sizes:
        a = inputs(n)
        for name in ("eval", "hess"):
            args = a[:6] if name == "eval" else a
            py = getattr(_kernels_py, f"polar_pair_{name}")
            t_py = best_time(lambda: py(*args), repeat)
            if _kernels_cy is None:
                print(f"{n:8d} {name:<6s} {t_py:11.3e} {'n/a':>11s} {'n/a':>9s}")
                continue
            cy = getattr(_kernels_cy, f"polar_pair_{name}")
            ref, got = py(*args), cy(*args)
            for r, g in zip(ref if isinstance(ref, tuple) else (ref,), got if isinstance(got, tuple) else (got,)):
                assert np.allclose(r, g, rtol=1e-12, atol=1e-12), "backends disagree"
            t_cy = best_time(lambda: cy(*args), repeat)
            print(f"{n:8d} {name:<6s} {t_py:11.3e} {t_cy:11.3e} {t_py / t_cy:8.1f}x")


def bench_solve():
    for pure in ("1", "0"):
        env = dict(os.environ, ITDOPF_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        print(f"case118 ACP solve, {out[0]:<6s} backend: {float(out[1]):.3f} s")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="1000,10000,100000")
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--solve", action="store_true")
    args = p.parse_args(argv)
    bench_kernels([int(s) for s in args.sizes.split(",")], args.repeat)
    if args.solve:
        bench_solve()


if __name__ == "__main__":
    main()
