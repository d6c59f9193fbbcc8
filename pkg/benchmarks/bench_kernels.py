#!/usr/bin/env python3
"""Compare the compiled transition-table kernel against the pure-Python one.

Usage: python benchmarks/bench_kernels.py [--traces N] [--length T]

Both backends interpret the same flattened tables, so the benchmark labels
identical workloads; a mismatch in emissions aborts the run.
"""

import argparse
import time

import numpy as np

from cedgen import kernels
from cedgen.core import AE_ALPHABET
from cedgen.fsm.table import build_table
from cedgen.rules import builtin_rules


def bench(fn, tables, traces):
    t0 = time.perf_counter()
    out = [[fn(table, tr) for table in tables] for tr in traces]
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--traces", type=int, default=500)
    ap.add_argument("--length", type=int, default=60)
    args = ap.parse_args()

    rules = builtin_rules()
    tables = [build_table(d) for d in rules.rules.values()]
    rng = np.random.default_rng(0)
    traces = [[int(x) for x in rng.integers(0, len(AE_ALPHABET), size=args.length)]
              for _ in range(args.traces)]
    windows = args.traces * args.length * len(tables)

    py_t, py_out = bench(kernels.run_table_python, tables, traces)
    print(f"python : {py_t:.3f}s  ({windows / py_t / 1e6:.2f} M windows/s)")

    if kernels.IMPLEMENTATION != "cython":
        print("cython : unavailable (not built, or CEDGEN_PURE=1)")
        return

    cy_t, cy_out = bench(kernels.run_table_native, tables, traces)
    print(f"cython : {cy_t:.3f}s  ({windows / cy_t / 1e6:.2f} M windows/s)")
    print(f"speedup: {py_t / cy_t:.1f}x")

    for a, b in zip(py_out, cy_out):
        for ea, eb in zip(a, b):
            if [bool(x) for x in ea] != [bool(x) for x in eb]:
                raise SystemExit("backends disagree — benchmark aborted")
    print("outputs: identical")


if __name__ == "__main__":
    main()
