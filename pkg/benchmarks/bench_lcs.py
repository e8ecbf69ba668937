#!/usr/bin/env python3
"""Benchmark the compiled LCS kernel against the pure-Python fallback.

The character diff is the hot inner loop of merging: O(len_a * len_b) per
report pair. Usage:

    python benchmarks/bench_lcs.py --pairs 200 --lengths 50,150,300
"""

import argparse
import random
import time

from spanqa import _lcs_py

try:
    from spanqa import _lcs_fast
except ImportError:
    _lcs_fast = None

ALPHABET = "肺肝脾肾脑左右双未见可影密度正常增多片状点"


def make_pairs(n, length, seed):
    rng = random.Random(seed)
    pairs = []
    for _ in range(n):
        senior = "".join(rng.choices(ALPHABET, k=length))
        junior = list(senior)
        for _ in range(max(1, length // 20)):  # sprinkle edits
            pos = rng.randrange(length)
            junior[pos] = rng.choice(ALPHABET)
        pairs.append(("".join(junior), senior))
    return pairs


def bench(kernel, pairs, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for a, b in pairs:
            kernel.lcs_ops(a, b)
        best = min(best, time.perf_counter() - start)
    return len(pairs) / best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=200)
    parser.add_argument("--lengths", default="50,150,300",
                        help="comma-separated report lengths to benchmark")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    lengths = [int(v) for v in args.lengths.split(",")]
    if _lcs_fast is None:
        print("compiled kernel not built; showing pure-Python numbers only")

    header = f"{'length':>8} {'python pairs/s':>16}"
    if _lcs_fast is not None:
        header += f" {'compiled pairs/s':>18} {'speedup':>9}"
    print(header)
    for length in lengths:
        pairs = make_pairs(args.pairs, length, args.seed)
        py = bench(_lcs_py, pairs)
        row = f"{length:>8} {py:>16.1f}"
        if _lcs_fast is not None:
            fast = bench(_lcs_fast, pairs)
            row += f" {fast:>18.1f} {fast / py:>8.1f}x"
            for a, b in pairs[:20]:  # sanity: identical opcodes
                assert _lcs_fast.lcs_ops(a, b) == _lcs_py.lcs_ops(a, b)
        print(row)


if __name__ == "__main__":
    main()
