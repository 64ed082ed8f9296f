"""Experiment harness: simulate models, run estimators over checkpoints,
aggregate runs into summary tables.

Exit codes: 0 success, 2 configuration/usage error, 3 internal invariant
violation.  Replicas run in a process pool capped by MEMLEN_THREADS
(default 1, fully sequential and deterministic).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .backward import backward_memory_estimate
from .condprob import cond_prob_markov, estimate_cond_prob
from .counting import CountIndex
from .errors import MemlenError
from .forward import ReconstructionScheme, decide_p
from .oracles import oracle_cond, oracle_memory
from .processes import RNG_ID, generate, load_model, model_to_spec
from .sequence import (
    UNBOUNDED,
    EstimatorParams,
    Sample,
    Word,
    read_sample,
    write_sample,
)

SCHEMA_VERSION = "memlen-run-v1"
SCHEMES = ("backward", "forward-p", "forward-r", "condprob-fm", "condprob-markov")
MEMORY_HEADER = ["n", "in_set", "estimate", "oracle", "match", "theta", "kappa", "ms"]
CONDPROB_HEADER = ["n", "in_set", "symbol", "estimate", "oracle", "match", "theta", "kappa", "ms"]
ORACLE_MODELS = {"markov", "hidden", "ladder"}


def _fail(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)
    raise SystemExit(2)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MEMLEN_THREADS", "1")))
    except ValueError:
        return 1


def _parse_checkpoints(text: str) -> list[int]:
    pts = [int(p) for p in text.split(",") if p.strip()]
    if not pts or any(b <= a for a, b in zip(pts, pts[1:])):
        _fail("checkpoints must be strictly increasing")
    return pts


def _params(args) -> EstimatorParams:
    try:
        return EstimatorParams(gamma=args.gamma, beta=args.beta, epsilon=args.epsilon)
    except ValueError as e:
        _fail(str(e))


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for r in range(args.replicas):
        sample = generate(model, args.n, args.seed, stream=r)
        ext = "txt" if args.format == "txt" else "bin"
        write_sample(out / f"sample_{r:03d}.{ext}", sample, fmt=args.format)
    manifest = {
        "schema": SCHEMA_VERSION,
        "command": "simulate",
        "model": model_to_spec(model),
        "n": args.n,
        "seed": args.seed,
        "replicas": args.replicas,
        "rng": RNG_ID,
        "format": args.format,
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return 0


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def _oracle_memory_windowed(model, data: np.ndarray):
    """Memory length of the realized past, certified on a window; widened
    until a certificate appears (or the whole past is used)."""
    win = 64
    while True:
        past = Word(tuple(int(s) for s in data[-min(win, len(data)) :]))
        ans = oracle_memory(model, past)
        if ans.memory_length is not UNBOUNDED or win >= len(data):
            return ans
        win *= 4


def _estimate_one_replica(model, sample: Sample, params, scheme: str, checkpoints):
    rows = []
    recon = ReconstructionScheme(sample, params) if scheme == "forward-r" else None
    for n in checkpoints:
        if n > sample.n:
            _fail(f"checkpoint {n} beyond sample length {sample.n}")
        t0 = time.perf_counter()
        prefix = Sample.forward(sample.symbols[: n + 1])
        oracle_ans = _oracle_memory_windowed(model, prefix.symbols) if model is not None else None

        if scheme == "backward":
            index = CountIndex(Sample.backward(prefix.symbols))
            est = backward_memory_estimate(index, params)
            in_set, theta, kappa = 1, "", ""
            estimate = est
        elif scheme == "forward-p":
            dec = decide_p(prefix, params)
            in_set = int(dec.in_stopping_set)
            theta, kappa = dec.coverage_index, dec.word_index if dec.in_stopping_set else ""
            estimate = dec.memory_length if dec.in_stopping_set else ""
        elif scheme == "forward-r":
            dec = recon.decide(n)
            in_set = int(dec.in_stopping_set)
            theta, kappa = dec.coverage_index, dec.word_index if dec.in_stopping_set else ""
            estimate = dec.memory_length if dec.in_stopping_set else ""
        else:
            rows.extend(
                _condprob_rows(model, prefix, params, scheme, t0, oracle_ans)
            )
            continue

        ms = int((time.perf_counter() - t0) * 1000)
        if oracle_ans is not None and oracle_ans.memory_length is not UNBOUNDED:
            oracle = oracle_ans.memory_length
            match = int(estimate == oracle) if estimate != "" else ""
        else:
            oracle, match = "", ""
        rows.append([n, in_set, estimate, oracle, match, theta, kappa, ms])
    return rows


def _condprob_rows(model, prefix: Sample, params, scheme: str, t0, oracle_ans):
    n = prefix.n
    law = None
    if model is not None:
        try:
            law = {x: float(p) for x, p in oracle_cond(model, _tail_word(prefix)).items()}
        except MemlenError:
            law = None
    if scheme == "condprob-markov":
        out = cond_prob_markov(prefix, params)
        in_set, theta, kappa = int(out.in_stopping_set), "", ""
        estimates = out.estimates or {}
    else:  # condprob-fm rides on the scheme-P stopping set
        dec = decide_p(prefix, params)
        in_set = int(dec.in_stopping_set)
        theta = dec.coverage_index
        kappa = dec.word_index if dec.in_stopping_set else ""
        estimates = {}
        if dec.in_stopping_set:
            mem_len = dec.memory_length
            for x in _observed_successors(prefix, mem_len):
                estimates[x] = estimate_cond_prob(prefix, mem_len, x)
    ms = int((time.perf_counter() - t0) * 1000)
    if not estimates:
        return [[n, in_set, "", "", "", "", theta, kappa, ms]]
    rows = []
    for x, est in sorted(estimates.items()):
        if law is not None:
            oracle = law.get(x, 0.0)
            match = int(abs(est.qhat - oracle) <= 0.02)
            oracle = f"{oracle:.6f}"
        else:
            oracle, match = "", ""
        rows.append([n, in_set, x, f"{est.qhat:.6f}", oracle, match, theta, kappa, ms])
    return rows


def _tail_word(prefix: Sample, width: int = 64) -> Word:
    data = prefix.symbols
    return Word(tuple(int(s) for s in data[-min(width, len(data)) :]))


def _observed_successors(prefix: Sample, mem_len: int) -> list[int]:
    from . import _kernels

    if mem_len == 0:
        return [int(x) for x in np.unique(prefix.symbols)]
    w = prefix.symbols[len(prefix.symbols) - mem_len :]
    pos = _kernels.occurrence_positions(prefix.symbols, w, mem_len - 1, prefix.n - 1)
    if len(pos) == 0:
        return []
    return [int(x) for x in np.unique(prefix.symbols[pos + 1])]


def _run_replica(task):
    model, args_dict, replica = task
    params = EstimatorParams(
        gamma=args_dict["gamma"], beta=args_dict["beta"], epsilon=args_dict["epsilon"]
    )
    if model is not None:
        sample = generate(model, args_dict["n"], args_dict["seed"], stream=replica)
    else:
        sample = read_sample(args_dict["input"], fmt=args_dict["format"])
    return _estimate_one_replica(
        model, sample, params, args_dict["scheme"], args_dict["checkpoints"]
    )


def cmd_estimate(args) -> int:
    params = _params(args)
    if args.scheme not in SCHEMES:
        _fail(f"unknown scheme {args.scheme!r}")
    if (args.model is None) == (args.input is None):
        _fail("give exactly one of --model / --input")
    model = load_model(args.model) if args.model else None
    if args.input and args.replicas != 1:
        _fail("--input runs are single-replica")

    checkpoints = _parse_checkpoints(args.checkpoints) if args.checkpoints else None
    if checkpoints is None:
        if args.n is None:
            _fail("give --checkpoints or --n")
        checkpoints = [args.n]
    n_max = checkpoints[-1]
    args_dict = {
        "gamma": args.gamma,
        "beta": args.beta,
        "epsilon": args.epsilon,
        "n": args.n or n_max,
        "seed": args.seed,
        "scheme": args.scheme,
        "checkpoints": checkpoints,
        "input": args.input,
        "format": args.format,
    }
    if args_dict["n"] < n_max:
        _fail("--n must reach the last checkpoint")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(model, args_dict, r) for r in range(args.replicas)]
    workers = _workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replica, tasks))
    else:
        results = [_run_replica(t) for t in tasks]

    header = CONDPROB_HEADER if args.scheme.startswith("condprob") else MEMORY_HEADER
    for r, rows in enumerate(results):
        with open(out / f"estimate_{r:03d}.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
    manifest = {
        "schema": SCHEMA_VERSION,
        "command": "estimate",
        "scheme": args.scheme,
        "csv_schema": "condprob-v1" if args.scheme.startswith("condprob") else "memory-v1",
        "model": model_to_spec(model) if model else None,
        "input": args.input,
        "contract": "checked" if model else "unchecked",
        "params": {"gamma": args.gamma, "beta": args.beta, "epsilon": args.epsilon},
        "checkpoints": checkpoints,
        "seed": args.seed,
        "replicas": args.replicas,
        "rng": RNG_ID,
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(args) -> int:
    run_dirs = [Path(d) for d in args.runs]
    manifests = []
    for d in run_dirs:
        mpath = d / "manifest.json"
        if not mpath.exists():
            _fail(f"missing manifest in {d}")
        with open(mpath) as f:
            manifests.append(json.load(f))
    schemes = {m.get("scheme") for m in manifests}
    if len(schemes) != 1:
        _fail(f"mixed schemes in report inputs: {sorted(map(str, schemes))}")

    per_replica = []
    for d, manifest in zip(run_dirs, manifests):
        for path in sorted(d.glob("estimate_*.csv")):
            with open(path, newline="") as f:
                rows = list(csv.DictReader(f))
            total = len(rows)
            in_set = sum(1 for r in rows if r["in_set"] == "1")
            matched = [r for r in rows if r["match"] != ""]
            match_rate = (
                sum(int(r["match"]) for r in matched) / len(matched) if matched else ""
            )
            density = in_set / total if total else 0.0
            per_replica.append(
                {
                    "run": str(d),
                    "replica": path.stem,
                    "rows": total,
                    "density": f"{density:.6f}",
                    "match_rate": f"{match_rate:.6f}" if match_rate != "" else "",
                }
            )
    out_path = Path(args.out) if args.out else None
    summary_rows = per_replica
    rates = [float(r["match_rate"]) for r in per_replica if r["match_rate"] != ""]
    densities = [float(r["density"]) for r in per_replica]
    aggregate = {
        "run": "aggregate",
        "replica": f"{len(per_replica)} replicas",
        "rows": sum(r["rows"] for r in per_replica),
        "density": f"{np.mean(densities):.6f}" if densities else "",
        "match_rate": (
            f"{np.mean(rates):.6f} (min {np.min(rates):.6f})" if rates else ""
        ),
    }
    summary_rows = per_replica + [aggregate]
    writer_target = open(out_path, "w", newline="") if out_path else sys.stdout
    try:
        writer = csv.DictWriter(
            writer_target, fieldnames=["run", "replica", "rows", "density", "match_rate"]
        )
        writer.writeheader()
        writer.writerows(summary_rows)
    finally:
        if out_path:
            writer_target.close()
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memlen")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate sample files from a model spec")
    sim.add_argument("--model", required=True, help="model spec JSON file")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--replicas", type=int, default=1)
    sim.add_argument("--format", choices=("txt", "bin"), default="txt")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="run an estimator over checkpoints")
    est.add_argument("--model", help="model spec JSON (enables oracle columns)")
    est.add_argument("--input", help="sample file (contract-unchecked run)")
    est.add_argument("--scheme", required=True, choices=SCHEMES)
    est.add_argument("--gamma", type=float, default=0.5)
    est.add_argument("--beta", type=float, default=0.24)
    est.add_argument("--epsilon", type=float, default=0.1)
    est.add_argument("--n", type=int)
    est.add_argument("--checkpoints", help="comma-separated strictly increasing times")
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--replicas", type=int, default=1)
    est.add_argument("--format", choices=("txt", "bin"), default="txt")
    est.add_argument("--out", required=True)
    est.set_defaults(func=cmd_estimate)

    rep = sub.add_parser("report", help="aggregate completed runs")
    rep.add_argument("runs", nargs="+", help="run directories")
    rep.add_argument("--out", help="summary CSV path (default: stdout)")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except MemlenError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except AssertionError as e:  # internal invariant violation
        print(f"internal error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
