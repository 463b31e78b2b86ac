"""Time the numba and numpy tally kernels on the same inputs.

Usage: python3 benchmarks/bench_kernels.py [--trials T] [--n N] [--repeat R]
"""

import argparse
import time

import numpy as np

from qensemble import _accel
from qensemble.measurement import born_cdf


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--entries", type=int, default=4)
    ap.add_argument("--outcomes", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    cdf = np.vstack([born_cdf(p) for p in rng.dirichlet(np.ones(args.outcomes), size=args.entries)])
    rows = np.sort(rng.integers(0, args.entries, size=args.n))
    u = rng.random((args.trials, args.n))

    print(f"tally_trials: {args.trials} trials x {args.n} molecules, "
          f"{args.entries} entries, {args.outcomes} outcomes")
    t_np, ref = best_of(lambda: _accel.tally_trials_numpy(u, cdf, rows), args.repeat)
    print(f"  numpy  {t_np * 1e3:9.2f} ms")
    if _accel.HAVE_NUMBA:
        _accel.tally_trials_numba(u[:1], cdf, rows)  # compile outside the timing
        t_nb, out = best_of(lambda: _accel.tally_trials_numba(u, cdf, rows), args.repeat)
        assert np.array_equal(out, ref), "backends disagree"
        print(f"  numba  {t_nb * 1e3:9.2f} ms   speedup x{t_np / t_nb:.1f}")

    flat = u.reshape(-1)
    rows_flat = np.resize(rows, flat.size)
    print(f"draw_categorical: {flat.size} draws")
    t_np, ref = best_of(lambda: _accel.draw_categorical_numpy(flat, cdf, rows_flat), args.repeat)
    print(f"  numpy  {t_np * 1e3:9.2f} ms")
    if _accel.HAVE_NUMBA:
        _accel.draw_categorical_numba(flat[:10], cdf, rows_flat[:10])
        t_nb, out = best_of(lambda: _accel.draw_categorical_numba(flat, cdf, rows_flat), args.repeat)
        assert np.array_equal(out, ref), "backends disagree"
        print(f"  numba  {t_nb * 1e3:9.2f} ms   speedup x{t_np / t_nb:.1f}")


if __name__ == "__main__":
    main()
