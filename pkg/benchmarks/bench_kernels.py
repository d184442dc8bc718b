"""Timing comparison of the compiled and pure-numpy kernel backends.

Runs both operations on identical inputs, checks the outputs agree, and
prints best-of-N wall times per backend::

    python3 benchmarks/bench_kernels.py --trials 200000 --repeats 7
"""

import argparse
import time

import numpy as np

from ionduet.kernels import available_backends
from ionduet.kernels.pyref import K_MAX


def _rotation_inputs(rng, n_trials, dim):
    states = rng.standard_normal((n_trials, dim)) + 1j * rng.standard_normal((n_trials, dim))
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    h = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = h + h.conj().T
    eigvals, basis = np.linalg.eigh(h)
    times = rng.uniform(0.0, 1e-5, n_trials)
    return states, basis, eigvals, times


def _poisson_inputs(rng, n_trials, components=3):
    uniforms = rng.random((n_trials, components))
    lams = rng.uniform(0.0, 30.0, (n_trials, components))
    return uniforms, lams, np.exp(-lams)


def _best_of(fn, args, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=200_000, help="batch size per call")
    parser.add_argument("--dim", type=int, default=16, help="state dimension (4 * n_max)")
    parser.add_argument("--repeats", type=int, default=7, help="repetitions, best taken")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends found: {', '.join(sorted(backends))}  (K_MAX={K_MAX})")
    rng = np.random.default_rng(args.seed)
    rot_args = _rotation_inputs(rng, args.trials, args.dim)
    poi_args = _poisson_inputs(rng, args.trials)

    workloads = [
        ("apply_phased_rotation", rot_args, f"{args.trials} x dim {args.dim}"),
        ("poisson_mixture_counts", poi_args, f"{args.trials} x 3 components"),
    ]
    for op, op_args, shape in workloads:
        print(f"\n{op}  ({shape}, best of {args.repeats})")
        results = {}
        for name in sorted(backends):
            best, out = _best_of(getattr(backends[name], op), op_args, args.repeats)
            results[name] = (best, out)
            print(f"  {name:<8} {best * 1e3:8.2f} ms")
        if len(results) == 2:
            py_t, py_out = results["python"]
            cy_t, cy_out = results["cython"]
            if op == "poisson_mixture_counts":
                agree = np.array_equal(py_out, cy_out)
                print(f"  outputs bit-identical: {agree}")
            else:
                diff = float(np.max(np.abs(py_out - cy_out)))
                agree = diff < 1e-12
                print(f"  max |difference|: {diff:.2e}")
            print(f"  speedup (python / cython): {py_t / cy_t:.2f}x")
            if not agree:
                raise SystemExit(f"{op}: backends disagree")


if __name__ == "__main__":
    main()
