"""Compare the compiled ADMM kernel against the pure-NumPy twin.

Run from the repository root:

    python3 benchmarks/bench_solver.py

Both backends run the same iteration on identical inputs, so iteration
counts match and solutions agree to near machine precision; the table
reports wall time per solve and the speedup.
"""

import time

import numpy as np

from csisrc import _solver_py
from csisrc.model import ActivityClass, Dictionary
from csisrc.solver import _factorization

try:
    from csisrc import _solver_core
except ImportError:
    _solver_core = None


def make_problem(rng, m, n):
    atoms = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    atoms /= np.linalg.norm(atoms, axis=0)
    D = Dictionary(atoms=atoms,
                   class_offsets=((ActivityClass.E, 0, n),))
    y = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return _factorization(D), y


def time_backend(admm, mats, ys, eps_scale=0.3, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for y in ys:
            eps = eps_scale * np.linalg.norm(y)
            admm(*mats, y.copy(), eps, 1.0, 2000, 1e-6)
        best = min(best, (time.perf_counter() - t0) / len(ys))
    return best


def main():
    rng = np.random.default_rng(0)
    sizes = [(16, 40), (51, 240), (102, 480)]
    n_solves = 20
    print(f"{'rows x cols':>12} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for m, n in sizes:
        mats, _ = make_problem(rng, m, n)
        ys = [rng.standard_normal(m) + 1j * rng.standard_normal(m)
              for _ in range(n_solves)]
        t_py = time_backend(_solver_py.admm_bpdn, mats, ys)
        if _solver_core is None:
            print(f"{m:>5} x {n:<4} {t_py * 1e3:>10.2f}ms "
                  f"{'(not built)':>12} {'-':>9}")
            continue
        t_c = time_backend(_solver_core.admm_bpdn, mats, ys)
        print(f"{m:>5} x {n:<4} {t_py * 1e3:>10.2f}ms {t_c * 1e3:>10.2f}ms "
              f"{t_py / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
