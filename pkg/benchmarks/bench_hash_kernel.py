#!/usr/bin/env python3
"""Benchmark the compiled feature-hashing kernel against the pure-Python twin.

Usage: python3 benchmarks/bench_hash_kernel.py [--docs N] [--dim D]

Both implementations must produce bit-identical bucket counts; the benchmark
verifies that on every document before timing.
"""

import argparse
import random
import time

import numpy as np

from policygraph import _kernels
from policygraph._kernels import python_impl
from policygraph.embedding import DEFAULT_SEED, tokenize

WORDS = (
    "forest restoration incentive payment landowner reforestation program "
    "fines loans supplies assistance policy instrument sentence topic "
    "restauración bosque pago directo agricultores árboles ley artículo"
).split()


def make_corpus(n_docs: int, rng: random.Random) -> list[str]:
    return [" ".join(rng.choice(WORDS) for _ in range(rng.randint(8, 40)))
            for _ in range(n_docs)]


def run(impl, corpus: list[str], dim: int) -> tuple[float, np.ndarray]:
    acc = np.zeros(dim, dtype=np.float64)
    out = np.zeros(dim, dtype=np.float64)
    started = time.perf_counter()
    for text in corpus:
        out[:] = 0.0
        impl(text, tokenize(text), dim, DEFAULT_SEED, out)
        acc += out
    return time.perf_counter() - started, acc


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=5000)
    parser.add_argument("--dim", type=int, default=4096)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    corpus = make_corpus(args.docs, random.Random(args.seed))
    print(f"backend selected at import: {_kernels.BACKEND}")
    print(f"corpus: {args.docs} documents, dim={args.dim}")

    py_time, py_acc = run(python_impl.accumulate_counts, corpus, args.dim)
    native_time, native_acc = run(_kernels.accumulate_counts, corpus, args.dim)

    if not np.array_equal(py_acc, native_acc):
        raise SystemExit("FAIL: implementations disagree")
    print("outputs bit-identical: yes")
    print(f"pure python : {py_time:8.3f} s  ({args.docs / py_time:9.0f} docs/s)")
    print(f"{_kernels.BACKEND:12s}: {native_time:8.3f} s  ({args.docs / native_time:9.0f} docs/s)")
    if _kernels.BACKEND == "compiled":
        print(f"speedup     : {py_time / native_time:8.2f}x")


if __name__ == "__main__":
    main()
