"""Compare the compiled and pure-NumPy compute kernels.

Times the three hot paths — lattice-sum Green values, their gradients, and
one projected-SOR sweep — against both backends in a single process and
prints a small table.  Run from the repository root:

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --reps 20 --n-pairs 20000 --h 0.0078125
"""

import argparse
import time

import numpy as np

from abrikosov import backend
from abrikosov.obstacle import DomainGrid, UnitDisk
from abrikosov.torus import GreenEvaluator, TorusSpec


def _time(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_green(n_pairs: int, reps: int):
    spec = TorusSpec.square()
    ev = GreenEvaluator(spec)
    rng = np.random.default_rng(0)
    frac = rng.random((n_pairs, 2)) * 0.9 + 0.05
    ds, dt = frac[:, 0].copy(), frac[:, 1].copy()
    a, b = ev.tau.real, ev.tau.imag
    nterms = ev.nterms
    rows = []
    for label, vals, grads in (
        ("numpy", backend.green_values_numpy, backend.green_grads_numpy),
        ("numba", backend.green_values_numba, backend.green_grads_numba),
    ):
        if label == "numba" and not backend.HAVE_NUMBA:
            rows.append((label, None, None))
            continue
        vals(ds, dt, a, b, nterms)  # warm/compile
        grads(ds, dt, a, b, nterms)
        rows.append((label,
                     _time(lambda: vals(ds, dt, a, b, nterms), reps),
                     _time(lambda: grads(ds, dt, a, b, nterms), reps)))
    return rows


def bench_psor(h: float, reps: int):
    grid = DomainGrid(UnitDisk(), h)
    values = np.zeros_like(grid.mask, dtype=float)
    omega = 2.0 / (1.0 + np.sin(np.pi * h / 2.0))
    rows = []
    for label, sweep in (("numpy", backend.psor_sweep_numpy),
                         ("numba", backend.psor_sweep_numba)):
        if label == "numba" and not backend.HAVE_NUMBA:
            rows.append((label, None))
            continue

        def one_pass():
            v = values.copy().ravel()
            for args in grid._sweep_sets:
                sweep(v, *args, 0.0, omega)

        one_pass()  # warm/compile
        rows.append((label, _time(one_pass, reps)))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=10,
                    help="repetitions per timing (best-of is reported)")
    ap.add_argument("--n-pairs", type=int, default=10000,
                    help="number of point pairs for the Green kernels")
    ap.add_argument("--h", type=float, default=1.0 / 128.0,
                    help="grid spacing for the relaxation sweep")
    args = ap.parse_args()

    if not backend.HAVE_NUMBA:
        print("numba not importable; only the numpy column will be timed\n")

    green = bench_green(args.n_pairs, args.reps)
    psor = bench_psor(args.h, args.reps)

    def fmt(t):
        return "      n/a" if t is None else f"{t * 1e3:8.3f}"

    print(f"green kernels: {args.n_pairs} pairs, best of {args.reps}")
    print(f"{'backend':>8} {'values ms':>9} {'grads ms':>9}")
    for label, tv, tg in green:
        print(f"{label:>8} {fmt(tv):>9} {fmt(tg):>9}")

    print(f"\nrelaxation sweep: h = {args.h:g} (disk domain), "
          f"best of {args.reps}")
    print(f"{'backend':>8} {'sweep ms':>9}")
    for label, ts in psor:
        print(f"{label:>8} {fmt(ts):>9}")

    by_label = {label: tv for label, tv, _ in green}
    if all(by_label.get(k) for k in ("numpy", "numba")):
        print(f"\nspeedup (values): {by_label['numpy'] / by_label['numba']:.1f}x")


if __name__ == "__main__":
    main()
