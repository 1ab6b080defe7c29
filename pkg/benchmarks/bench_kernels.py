"""Compare the numba and numpy backends on the banded kernels.

Usage::

    python benchmarks/bench_kernels.py [--n1 32] [--n2 2000] [--repeat 3]

The matrix is the unperturbed strip operator plus a random complex
diagonal, which has the same band structure as the production solves.
"""
import argparse
import time

import numpy as np

from thresholdlab import _backend
from thresholdlab.banded import BandedMatrix, lu_factor
from thresholdlab.direct_solver import assemble_operator, build_quasi_grid
from thresholdlab.perturbation import PerturbationPair, PotentialSpec
from thresholdlab.transverse import build_strip_spectrum


def make_matrix(n1, n2, seed=0):
    grid = build_quasi_grid(n1, n2, 60.0, 3.0, "dirichlet", support_halfwidth=np.pi, check=False)
    pair = PerturbationPair(PotentialSpec.trig_series([1.0], [0.0, 3.0]))
    op = assemble_operator(build_strip_spectrum(4), pair, 0.2, grid)
    rng = np.random.default_rng(seed)
    band = op.matrix.band.copy()
    band[:, op.matrix.kl] += 1e-3 * (rng.standard_normal(op.n) + 1j * rng.standard_normal(op.n))
    return BandedMatrix(band, op.matrix.kl, op.matrix.ku).shifted(3.9 + 0.01j)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def run(n1, n2, repeat):
    A = make_matrix(n1, n2)
    x = np.random.default_rng(1).standard_normal(A.n) + 0j
    results = {}
    for name in ("numpy", "numba") if _backend.HAVE_NUMBA else ("numpy",):
        _backend.set_backend(name)
        lu_factor(make_matrix(n1, 16)).solve(x[: n1 * 16])  # warm-up / JIT compile
        A.matvec(x)
        t_mv, y = best_of(lambda: A.matvec(x), repeat)
        t_lu, lu = best_of(lambda: lu_factor(A), repeat)
        t_sv, z = best_of(lambda: lu.solve(x), repeat)
        res = np.linalg.norm(A.matvec(z) - x) / np.linalg.norm(x)
        results[name] = (t_mv, t_lu, t_sv, res, y)
    print(f"n = {A.n} (N1={n1}, N2={n2}, bandwidth {A.kl})")
    print(f"{'backend':8s} {'matvec [s]':>11s} {'factor [s]':>11s} {'solve [s]':>11s} {'rel. residual':>14s}")
    for name, (a, b, c, r, _) in results.items():
        print(f"{name:8s} {a:11.4f} {b:11.4f} {c:11.4f} {r:14.2e}")
    if len(results) == 2:
        (a1, b1, c1, _, y1), (a2, b2, c2, _, y2) = results["numpy"], results["numba"]
        print(f"speed-up  {a1 / a2:10.1f}x {b1 / b2:10.1f}x {c1 / c2:10.1f}x")
        print(f"matvec agreement: {np.max(np.abs(y1 - y2)):.1e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n1", type=int, default=32)
    ap.add_argument("--n2", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    run(a.n1, a.n2, a.repeat)
