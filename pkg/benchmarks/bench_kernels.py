"""Compare the numba and numpy kernel backends.

Both forms live side by side in ``syncaction._kernels``, so one process can
time them on identical inputs. The first numba call (JIT compile) is run
once before timing and excluded.

    python3 benchmarks/bench_kernels.py [--n 100] [--repeat 5]
"""
from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from syncaction import _kernels as K
from syncaction._backend import HAS_NUMBA


def _cases(n: int, rng: np.random.Generator) -> dict:
    theta = rng.uniform(0.0, 2.0 * math.pi, n)
    omega = rng.normal(0.0, 1.0, n)
    X = np.full((n, n), 4.0 / n)
    np.fill_diagonal(X, 0.0)
    steps = 2000
    thetas = rng.uniform(0.0, 2.0 * math.pi, (500, n))
    times = np.linspace(0.0, 50.0, 20000)
    values = np.sin(times)
    small = (rng.random((9, 9)) < 0.5).astype(float)
    np.fill_diagonal(small, 0.0)
    return {
        "rhs": (K.rhs_numpy, K.rhs_numba, (theta, omega, X)),
        "integrate rk4": (K.integrate_numpy, K.integrate_numba,
                          (theta, omega, X, 0.01, steps, K.RK4, 10)),
        "potential": (K.potential_numpy, K.potential_numba, (thetas, X)),
        "exp_smooth": (K.exp_smooth_numpy, K.exp_smooth_numba, (values, times, 1.0)),
        "path_sum (9 nodes)": (K.path_sum_python, K.path_sum_numba, (small, 0, 8, 8)),
    }


def _best(fn, args, repeat: int) -> float:
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05 and number < 10000:
        number *= 4
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=100, help="oscillator count")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if not HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, (f_np, f_nb, fargs) in _cases(args.n, rng).items():
        f_nb(*fargs)  # compile
        t_np = _best(f_np, fargs, args.repeat)
        t_nb = _best(f_nb, fargs, args.repeat)
        print(f"{name:<20}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
