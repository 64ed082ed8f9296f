#!/usr/bin/env python3
"""Benchmark the hot kernels under the JIT path and the fallback path.

Run directly for the current backend, or with --compare to time both (the
fallback run happens in a subprocess with MEMLEN_DISABLE_NUMBA=1):

    python benchmarks/bench_kernels.py --compare
"""

import argparse
import json
import os
import subprocess
import sys
import time


def bench(fn, *args, repeats=3, warmup=1):
    for _ in range(warmup):
        fn(*args)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_suite(n):
    import memlen._kernels as K
    from memlen import CountIndex, EstimatorParams, Sample, parity_chain
    from memlen.backward import backward_memory_estimate
    from memlen.forward import ReconstructionScheme
    from memlen.processes import generate, make_rng

    model = parity_chain()
    sample = generate(model, n, seed=0)
    data = sample.symbols
    results = {"backend": "numba" if K.NUMBA_ENABLED else "fallback"}

    results["generate_chain"] = bench(lambda: generate(model, n, seed=1))

    word = data[-3:].copy()
    results["occurrence_scan"] = bench(
        lambda: K.occurrence_positions(data, word, 0, len(data) - 1)
    )

    def build_index():
        idx = CountIndex(Sample.backward(data))
        idx.ids(12)
        return idx

    results["block_ids_depth12"] = bench(build_index)

    params = EstimatorParams()

    def estimate():
        idx = CountIndex(Sample.backward(data))
        return backward_memory_estimate(idx, params)

    results["backward_estimate"] = bench(estimate, repeats=2)

    def reconstruct():
        scheme = ReconstructionScheme(sample, params)
        for anchor in range(64):
            scheme._anchor(anchor).ensure(data, sample.n)

    results["reconstruction_64_anchors"] = bench(reconstruct, repeats=2)

    rng = make_rng(2)
    results["jump_chain_1e6"] = bench(
        lambda: K.sample_geometric_jump(make_rng(2), 1_000_000, 0, 0)
    )
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=100_000)
    parser.add_argument("--compare", action="store_true")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args()

    mine = run_suite(args.n)
    if args.json:
        print(json.dumps(mine))
        return

    rows = [mine]
    if args.compare:
        env = dict(os.environ)
        if mine["backend"] == "numba":
            env["MEMLEN_DISABLE_NUMBA"] = "1"
        else:
            env.pop("MEMLEN_DISABLE_NUMBA", None)
        out = subprocess.run(
            [sys.executable, __file__, "--n", str(args.n), "--json"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))

    keys = [k for k in rows[0] if k != "backend"]
    name_w = max(len(k) for k in keys) + 2
    header = f"{'kernel':<{name_w}}" + "".join(f"{r['backend']:>12}" for r in rows)
    if len(rows) == 2:
        header += f"{'speedup':>10}"
    print(f"n = {args.n}")
    print(header)
    print("-" * len(header))
    for k in keys:
        line = f"{k:<{name_w}}" + "".join(f"{r[k] * 1000:>10.1f}ms" for r in rows)
        if len(rows) == 2 and rows[0][k] > 0:
            line += f"{rows[1][k] / rows[0][k]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
