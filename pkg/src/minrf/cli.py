"""Command line front end.

    minrf solve --objective random --n 50 --m 6 --algorithm algr+randgr --r 1
    minrf sweep --config experiments/fig1.json --output results/fig1.csv
    minrf verify --instance inst.json --solution sol.json --r 1
    minrf demo-adversarial --n 30 --r 5 --queries 1000 --seeds 200
    minrf gen-tight --k 4 --output tight4.json

Exit codes: 0 ok, 1 verification failed, 2 input/config error,
3 infeasible instance, 4 numerical stall.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from .cover_robust import parse_algorithm, run_named
from .cover_zero import Alg0Request, NumericalStall, get_alg0
from .harness import ExperimentConfig, build_instance, emit_plot_data, rows_to_csv, run_experiment
from .objectives import adversarial_oracle, probe_search, set_cover_instance, tight_instance
from .oracle import InputError, QueryLedger, SeededRng
from .verify import is_robust, worst_case_removal

EXIT_OK, EXIT_UNVERIFIED, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_STALL = 0, 1, 2, 3, 4


def _load_instance(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("kind", "set-cover") != "set-cover":
        raise InputError("instance files hold set-cover instances only")
    return set_cover_instance(doc["universe"], doc["family"], T=float(doc.get("T", 1.0)),
                              labels=doc.get("labels"))


def _objective_from_args(a) -> dict:
    if a.instance:
        with open(a.instance) as fh:
            doc = json.load(fh)
        return {"kind": "set-cover", "universe": doc["universe"], "family": doc["family"],
                "labels": doc.get("labels")}
    obj = {"kind": a.objective}
    for key in ("n", "m", "density", "graph", "k", "ratings", "genome", "users", "nodes", "p"):
        val = getattr(a, key, None)
        if val is not None:
            obj[key] = val
    return obj


def cmd_solve(a) -> int:
    obj = _objective_from_args(a)
    T = a.T if a.T is not None else (1.0 if obj["kind"] in ("random", "set-cover", "tight") else 0.5)
    inst = build_instance(obj, T, a.K, a.seed)
    ledger = QueryLedger()
    robust, base = parse_algorithm(a.algorithm)
    if a.r == 0 and robust != "disjoint":
        res = get_alg0(base, gamma=a.gamma)(
            Alg0Request(inst.n, inst.constraints, a.alpha, rng=SeededRng(a.seed), ledger=ledger))
    else:
        res = run_named(a.algorithm, inst.n, inst.constraints, a.r, a.alpha, seed=a.seed,
                        gamma=a.gamma, ledger=ledger)
    doc = {
        "algorithm": a.algorithm,
        "r": a.r,
        "alpha": a.alpha,
        "feasible": res.feasible,
        "solution": sorted(res.solution),
        "order": res.order,
        "size": res.size,
        "queries": ledger.total,
    }
    if inst.labels:
        doc["labels"] = [inst.labels[e] for e in doc["solution"]]
    if res.failure is not None:
        doc["failure"] = {"reason": res.failure.reason, "constraint": res.failure.constraint,
                          "element": res.failure.element, "round": res.failure.round,
                          "removal": sorted(res.failure.removal) if res.failure.removal else None}
    text = json.dumps(doc, indent=2)
    if a.output:
        with open(a.output, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_sweep(a) -> int:
    cfg = ExperimentConfig.from_file(a.config, output=a.output, seed=a.seed,
                                     repetitions=a.repetitions, jobs=a.jobs)
    if a.no_time:
        cfg.record_time = False
    rows = run_experiment(cfg)
    sys.stdout.write(rows_to_csv(rows))
    if a.plot_dir:
        for p in emit_plot_data(rows, a.plot_dir):
            logging.info("wrote %s", p)
    return EXIT_OK


def cmd_verify(a) -> int:
    inst = _load_instance(a.instance)
    with open(a.solution) as fh:
        S = json.load(fh)["solution"]
    cert = worst_case_removal(S, inst.constraints, a.r)
    ok = is_robust(S, inst.constraints, a.r, a.alpha)
    print(json.dumps({"robust": ok, "worst_value": cert.worst_value,
                      "removal": sorted(cert.removal), "constraint": cert.constraint}, indent=2))
    return EXIT_OK if ok else EXIT_UNVERIFIED


def cmd_demo_adversarial(a) -> int:
    hits = 0
    for s in range(a.seeds):
        c = adversarial_oracle(a.n, a.r, seed=a.seed + s)
        hits += probe_search(c, a.r, a.queries, SeededRng(a.seed, (s,)).generator())
    freq = hits / a.seeds
    bound = a.queries / math.comb(a.n, a.r) + 0.005
    print(json.dumps({"n": a.n, "r": a.r, "queries": a.queries, "seeds": a.seeds,
                      "detected": hits, "frequency": freq, "bound": bound,
                      "within_bound": freq <= bound}, indent=2))
    return EXIT_OK


def cmd_gen_tight(a) -> int:
    inst = tight_instance(a.k)
    doc = {"kind": "set-cover", "universe": inst.meta["universe"], "family": inst.meta["family"],
           "labels": inst.labels, "T": 1.0, "optimum": inst.meta["optimum"]}
    text = json.dumps(doc)
    if a.output:
        with open(a.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="minrf", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("solve", help="run one algorithm on one instance")
    s.add_argument("--objective", default="random",
                   choices=["random", "set-cover", "lt-influence", "movie-utility", "tight"])
    s.add_argument("--instance", help="set-cover instance JSON (overrides --objective)")
    s.add_argument("--algorithm", default="algr+greedy")
    s.add_argument("--r", type=int, default=0)
    s.add_argument("--alpha", type=float, default=0.1)
    s.add_argument("--gamma", type=float, default=0.2)
    s.add_argument("--T", type=float)
    s.add_argument("--K", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--density", type=float)
    s.add_argument("--graph")
    s.add_argument("--nodes", type=int)
    s.add_argument("--p", type=float)
    s.add_argument("--ratings")
    s.add_argument("--genome")
    s.add_argument("--users", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--output")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="run a configured experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--output")
    s.add_argument("--seed", type=int)
    s.add_argument("--repetitions", type=int)
    s.add_argument("--jobs", type=int)
    s.add_argument("--plot-dir")
    s.add_argument("--no-time", action="store_true", help="write mean_ms as 0 for byte-stable CSVs")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("verify", help="brute-force robustness check of a solution file")
    s.add_argument("--instance", required=True)
    s.add_argument("--solution", required=True)
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--alpha", type=float, default=0.0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("demo-adversarial", help="random probing against a hidden fatal removal")
    s.add_argument("--n", type=int, default=30)
    s.add_argument("--r", type=int, default=5)
    s.add_argument("--queries", type=int, default=1000)
    s.add_argument("--seeds", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_demo_adversarial)

    s = sub.add_parser("gen-tight", help="write the Alg1 tight instance")
    s.add_argument("--k", type=int, default=4)
    s.add_argument("--output")
    s.set_defaults(func=cmd_gen_tight)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalStall as exc:
        print(f"numerical stall: {exc}", file=sys.stderr)
        return EXIT_STALL
    except (InputError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
