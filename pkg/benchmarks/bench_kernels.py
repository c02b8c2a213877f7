"""Compare the compiled element kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--sizes 32 64 128] [--repeat 5]

Prints the best wall time of each backend for the residual/Jacobian kernel
and the third-derivative kernel on meshes of ``n x n`` cells, and checks
that both backends agree.
"""

import argparse
import timeit

import numpy as np

from pffc import kernels, verify
from pffc.mesh import build_mesh
from pffc.model import ModelParams


def _inputs(n, seed=0):
    mesh = build_mesh(n)
    p = ModelParams.from_engineering(1e6, 0.2, eps=4 * mesh.h)
    rng = np.random.default_rng(seed)
    cv = lambda X: np.ascontiguousarray(mesh.cell_values(X))
    U, dU, Z = (cv(verify.random_fields(mesh, rng)) for _ in range(3))
    N, dN, w = mesh.quadrature
    return p, U, dU, Z, N, dN, w


def bench(n, repeat):
    p, U, dU, Z, N, dN, w = _inputs(n)
    rows = []
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    results = {}
    for name in backends:
        mod = kernels.get_backend(name)
        fa = lambda: mod.element_a(U, N, dN, w, p.G_c, p.eps, p.kappa, p.mu, p.lam, True)
        ft = lambda: mod.element_a_third(U, dU, Z, N, dN, w, p.kappa, p.mu, p.lam)
        ta = min(timeit.repeat(fa, number=1, repeat=repeat))
        tt = min(timeit.repeat(ft, number=1, repeat=repeat))
        results[name] = (fa(), ft())
        rows.append((name, ta, tt))
    if len(backends) == 2:
        (r1, K1), v1 = results["python"]
        (r2, K2), v2 = results["cython"]
        err = max(np.abs(r1 - np.asarray(r2)).max() / np.abs(r1).max(),
                  np.abs(K1 - np.asarray(K2)).max() / np.abs(K1).max(),
                  np.abs(v1 - np.asarray(v2)).max() / np.abs(v1).max())
    else:
        err = float("nan")
    return rows, err


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'n':>5} {'backend':>8} {'a + Jacobian [ms]':>18} {'third [ms]':>11} {'speedup':>8}")
    for n in args.sizes:
        rows, err = bench(n, args.repeat)
        base = rows[0][1]
        for name, ta, tt in rows:
            print(f"{n:>5} {name:>8} {1e3 * ta:>18.2f} {1e3 * tt:>11.2f} {base / ta:>8.1f}")
        print(f"{'':>5} max relative difference between backends: {err:.1e}")


if __name__ == "__main__":
    main()
