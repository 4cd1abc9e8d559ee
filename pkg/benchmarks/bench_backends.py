"""Benchmark the compiled kernels against the pure numpy fallback.

Usage: python benchmarks/bench_backends.py

Times the two hot paths (dense brick-layer application and the sparse 0D
step) under each backend and prints the speedup. Both backends consume
identical random streams, so the timed work is the same.
"""

import time

import numpy as np

import paulitel.backend as B
from paulitel.circuits import BatchEngine, CircuitSpec
from paulitel.pauli import PauliString


def _with_backend(name, fn):
    mod = B.load_backend(name)
    saved = (B.apply_pairs_dense, B.match_sites, B.step_csr)
    B.apply_pairs_dense, B.match_sites, B.step_csr = (
        mod.apply_pairs_dense,
        mod.match_sites,
        mod.step_csr,
    )
    try:
        return fn()
    finally:
        B.apply_pairs_dense, B.match_sites, B.step_csr = saved


def bench_dense(n=1024, depth=512, rows=3, reps=3):
    spec = CircuitSpec(dimension=1, extent=n, depth=depth, seed=5)
    seeds = [PauliString({n // 2 + i: 1 + (i % 3)}) for i in range(rows)]

    def run():
        t0 = time.perf_counter()
        eng = BatchEngine(spec, seeds, 0)
        eng.run_to(depth)
        return time.perf_counter() - t0, int(eng.sizes().sum())

    return {name: min(_with_backend(name, run) for _ in range(reps)) for name in ("compiled", "pure")}


def bench_sparse(n=10**6, p=101, depth=16, reps=3):
    from paulitel.circuits import OperatorSeed
    from paulitel.util import STREAM_ENCODING, rng_for

    spec = CircuitSpec(dimension=0, extent=n, depth=depth, seed=6)
    rows = list(OperatorSeed(tuple(range(p))).triple(rng_for(6, STREAM_ENCODING, 0)))

    def run():
        t0 = time.perf_counter()
        eng = BatchEngine(spec, rows, 0)
        eng.run_to(depth)
        return time.perf_counter() - t0, int(eng.sizes().sum())

    return {name: min(_with_backend(name, run) for _ in range(reps)) for name in ("compiled", "pure")}


def main():
    print(f"default backend: {B.get_backend()}")
    for label, results in (("dense 1D (N=1024, depth=512, 3 rows)", bench_dense()),
                           ("sparse 0D (N=1e6, p=101, depth=16)", bench_sparse())):
        (tc, sc), (tp, sp) = results["compiled"], results["pure"]
        assert sc == sp, "backends disagree"
        print(f"{label}: compiled {tc:.3f}s  pure {tp:.3f}s  speedup {tp / tc:.1f}x")


if __name__ == "__main__":
    main()
