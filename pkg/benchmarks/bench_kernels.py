"""Time the numba and numpy backends of the hot kernels side by side.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is warmed up once per backend (numba compiles on first call)
before timing; the outputs of the two backends are compared as well.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from archdam import geometry
from archdam._accel import HAVE_NUMBA, set_backend
from archdam.kernels import css_forces, dominance_matrix, hex8_matrices
from archdam.modal import MaterialProps, mesh_dam, modal_analysis


def _best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    shape = geometry.make_shape(geometry.morrow_point_design().to_array())
    mesh = mesh_dam(shape, (16, 8, 2))
    coords = mesh.nodes[mesh.elements]
    mat = MaterialProps()
    F = rng.random((400, 3))
    n, d = 100, 30
    X = rng.random((n, d))
    q = rng.random(n)
    rank = rng.integers(1, 6, n)
    ar = np.where(rng.random((n, n)) < 0.8, 1.0, -1.0)
    return {
        "hex8 element matrices (256 elements)": lambda: hex8_matrices(coords, mat.E, mat.nu, mat.rho_concrete),
        "dominance matrix (400 x 3)": lambda: dominance_matrix(F),
        "css forces (100 agents x 30 vars)": lambda: css_forces(X, X, q, rank, ar, 0.55),
        "full modal analysis (16,8,2)": lambda: modal_analysis(shape, (16, 8, 2)),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    results, outputs = {}, {}
    for name, fn in cases().items():
        for b in backends:
            previous = set_backend(b)
            try:
                outputs[name, b] = fn()
                results[name, b] = _best_of(fn, args.repeat)
            finally:
                set_backend(previous)
    print(f"{'kernel':40s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup  agree" if len(backends) == 2 else ""))
    for name in cases():
        line = f"{name:40s}" + "".join(f"{results[name, b] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            a, c = outputs[name, "numba"], outputs[name, "numpy"]
            if hasattr(a, "frequencies"):
                a, c = a.frequencies, c.frequencies
            pairs = zip(a, c) if isinstance(a, tuple) else [(a, c)]
            agree = all(np.allclose(u, v, rtol=1e-10, atol=1e-12) for u, v in pairs)
            line += f"{results[name, 'numpy'] / results[name, 'numba']:10.1f}x  {'yes' if agree else 'NO'}"
        print(line)


if __name__ == "__main__":
    main()
