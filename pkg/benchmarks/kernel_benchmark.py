"""Compare the compiled field-update kernel against the pure-Python fallback.

Usage: python benchmarks/kernel_benchmark.py [--areas N] [--sweeps K]
Both backends consume identical pre-drawn random arrays, so besides timing
this doubles as an end-to-end equivalence check.
"""

import argparse
import time

import numpy as np

from carsmooth import ArealGraph, mixing_matrix
from carsmooth._kernels import BACKEND, phi_sweep, phi_sweep_py


def make_problem(G: int, seed: int = 0):
    side = int(np.sqrt(G))
    graph = ArealGraph.lattice(side, side)
    G = graph.num_areas
    rng = np.random.default_rng(seed)
    J = 2
    M = mixing_matrix(np.array([[0.3, 0.1], [0.1, 0.4]]))
    phi = rng.standard_normal((J, G))
    theta = M @ phi
    alpha = np.array([-4.0, -4.5])
    O = rng.poisson(5.0, (J, G)).astype(float)
    n = np.full(G, 2.0e4)
    lam = np.array([0.8, 0.8])
    indptr, indices = graph.adjacency_csr()
    step = np.full((J, G), 0.5)
    return dict(
        phi=phi, theta=theta, alpha=alpha, M=M, O=O, n=n, lam=lam,
        wplus=graph.neighbor_counts.astype(float), indptr=indptr,
        indices=indices, step=step,
    ), J, G


def run(kernel, prob, J, G, sweeps, seed=1):
    rng = np.random.default_rng(seed)
    phi = prob["phi"].copy()
    theta = prob["theta"].copy()
    alpha = prob["alpha"].copy()
    acc = np.zeros((J, G), dtype=np.int64)
    t0 = time.perf_counter()
    for _ in range(sweeps):
        z = rng.standard_normal((J, G))
        logu = np.log(rng.random((J, G)))
        kernel(phi, theta, alpha, prob["M"], prob["O"], prob["n"], prob["lam"],
               prob["wplus"], prob["indptr"], prob["indices"], prob["step"],
               z, logu, acc)
    return time.perf_counter() - t0, phi


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--areas", type=int, default=400)
    ap.add_argument("--sweeps", type=int, default=300)
    args = ap.parse_args()

    prob, J, G = make_problem(args.areas)
    t_py, phi_py = run(phi_sweep_py, prob, J, G, args.sweeps)
    if BACKEND == "cython":
        t_cy, phi_cy = run(phi_sweep, prob, J, G, args.sweeps)
        same = np.array_equal(phi_py, phi_cy)
        print(f"areas={G} sweeps={args.sweeps}")
        print(f"python  : {t_py:.4f} s  ({t_py / args.sweeps * 1e3:.3f} ms/sweep)")
        print(f"cython  : {t_cy:.4f} s  ({t_cy / args.sweeps * 1e3:.3f} ms/sweep)")
        print(f"speedup : {t_py / t_cy:.1f}x   bit-identical: {same}")
    else:
        print("compiled backend unavailable; python fallback only")
        print(f"python  : {t_py:.4f} s")


if __name__ == "__main__":
    main()
