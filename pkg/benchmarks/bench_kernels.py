"""Timing comparison of the numba kernels against their numpy fallbacks.

Run directly::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each hot kernel is timed on representative problem sizes with both
implementations (the numba variants are warmed up first so JIT compilation
is excluded).  Results print as a small table of best-of-``repeat`` times.
"""

import argparse
import time

import numpy as np

from hyperrom import kernels


def best_time(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_case(name, fn_numpy, fn_numba, args, repeat):
    t_np = best_time(fn_numpy, args, repeat)
    if fn_numba is None:
        print(f"{name:34s} {t_np * 1e6:10.1f} us {'n/a':>12s} {'n/a':>8s}")
        return
    fn_numba(*args)  # warm-up / compile
    t_nb = best_time(fn_numba, args, repeat)
    print(
        f"{name:34s} {t_np * 1e6:10.1f} us {t_nb * 1e6:10.1f} us "
        f"{t_np / t_nb:7.2f}x"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=7)
    args = parser.parse_args()
    repeat = args.repeat
    have = kernels.HAVE_NUMBA_KERNELS
    rng = np.random.default_rng(0)

    print(f"numba kernels available: {have}")
    print(f"{'kernel':34s} {'numpy':>13s} {'numba':>13s} {'speedup':>8s}")

    for n in (1000, 10000):
        u = 1.0 + rng.random(n)
        bench_case(
            f"burgers_rhs (N={n})",
            kernels.burgers_rhs_numpy,
            kernels.burgers_rhs_numba if have else None,
            (u, 0.002),
            repeat,
        )

    for n in (1000, 10000):
        diag = 1.0 + rng.random(n)
        sub = np.concatenate([[0.0], -0.1 * rng.random(n - 1)])
        b = rng.standard_normal(n)
        bench_case(
            f"bidiag_corner_solve (N={n})",
            kernels.bidiag_corner_solve_numpy,
            kernels.bidiag_corner_solve_numba if have else None,
            (diag, sub, -0.05, b),
            repeat,
        )

    for N, k, m in ((1000, 30, 60), (1000, 30, 240)):
        Q, _ = np.linalg.qr(rng.standard_normal((N, k)))
        rows = rng.choice(N, size=m, replace=False)
        mask = np.zeros(N, dtype=bool)
        mask[rows] = True
        B = Q[rows]
        L = np.linalg.cholesky(B.T @ B)
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        c = np.einsum("ij,ij->j", B, B)
        bench_case(
            f"sopt_scan_saturated (N={N},m={m})",
            kernels.sopt_scan_saturated_numpy,
            kernels.sopt_scan_saturated_numba if have else None,
            (L, logdet, c, Q, mask),
            repeat,
        )

    k = 30
    A = rng.standard_normal((k, 3 * k))
    G = A @ A.T
    L0 = np.linalg.cholesky(G)
    x = rng.standard_normal(k)
    bench_case(
        f"cholupdate (k={k})",
        lambda: kernels.cholupdate_numpy(L0.copy(), x.copy()),
        (lambda: kernels.cholupdate_numba(L0.copy(), x.copy())) if have else None,
        (),
        repeat,
    )


if __name__ == "__main__":
    main()
