"""Command-line front end.

Machine-readable output goes to stdout (or files); human-readable summaries
go to stderr. Every randomized command takes a seed and defaults it to 0,
so reruns are byte-identical; pass ``--seed random`` to opt into entropy.

Exit codes: 0 success, 2 invalid input, 3 infeasible or incompatible
method/graph, 4 budget out of range, 5 enumeration cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import os
import secrets
import sys

from .counting import CountingContext, count_mec, count_with_prior
from .errors import (BudgetError, CapExceededError, GraphFormatError,
                     InconsistencyError, InvalidEssentialGraphError,
                     MecDesignError, NotATreeError, NotAUcegError)
from .general_design import (GainEvaluator, brute_force_design, greedy_design,
                             guarantee_parameters, lazy_greedy_design,
                             required_samples, worst_case_gain)
from .graphio import graph_to_dict, graph_to_json, load_dag, load_graph, save_graph
from .graphs import Dag
from .orientation import essential_graph_of, interventional_essential_graph
from .sampling import RandomSource, sample_fast, sample_uniform
from .synth import (GeneratorConfig, discovered_edge_ratio, generate,
                    records_csv_text, run_experiment, summarize,
                    write_records_csv)
from .tree_design import ForestDecomposition, forest_worst_case_gain, minimax_forest

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_INCOMPATIBLE = 3
EXIT_BUDGET = 4
EXIT_CAP = 5

THREADS_ENV = "MECDESIGN_THREADS"


def _parse_seed(value: str) -> int:
    if value == "random":
        return secrets.randbits(48)
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer or 'random'")


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise GraphFormatError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if n < 1:
        raise GraphFormatError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _provenance(args: argparse.Namespace) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _emit(payload: dict, out_path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_count(args) -> int:
    g = load_graph(args.graph)
    if args.prior:
        prior = load_graph(args.prior)
        value = count_with_prior(g, prior)
    else:
        value = count_mec(g)
    sys.stdout.write(f"{value}\n")
    return EXIT_OK


def cmd_sample(args) -> int:
    g = load_graph(args.graph)
    source = RandomSource(args.seed)
    draw = sample_uniform if args.sampler == "uniform" else sample_fast
    context = CountingContext(g) if args.sampler == "uniform" else None
    lines = []
    for i in range(args.n):
        if args.sampler == "uniform":
            member = draw(g, source, i, context=context)
        else:
            member = draw(g, source, i)
        lines.append(graph_to_json(member))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"sampled {args.n} member(s) with the {args.sampler} sampler",
          file=sys.stderr)
    return EXIT_OK


def _design_samples(args, g) -> int | None:
    if args.samples is not None:
        return args.samples
    if args.eps_prime is not None or args.delta_prime is not None:
        if args.eps_prime is None or args.delta_prime is None:
            raise GraphFormatError("--eps-prime and --delta-prime must be given together")
        eps, delta = guarantee_parameters(args.eps_prime, args.delta_prime, max(args.k, 1))
        return required_samples(eps, delta, len(g.undirected))
    return None


def cmd_design(args) -> int:
    g = load_graph(args.graph)
    if not 0 <= args.k <= g.p:
        raise BudgetError(f"budget {args.k} outside [0, {g.p}]")
    method = args.method
    seed = args.seed
    if args.objective == "worst":
        if method == "tree-minimax":
            forest = ForestDecomposition.from_graph(g)
            targets, minimized = minimax_forest(forest, args.k)
            report = {
                "targets": [g.vertex_names[v] for v in targets],
                "objective": "worst",
                "objective_value": float(forest_worst_case_gain(forest, targets)),
                "method": "tree-minimax",
                "worst_component_total": minimized,
                "evaluations": 0,
                "per_step": [],
                "params": {"k": args.k},
            }
        elif method == "brute-force":
            report = brute_force_design(g, args.k, "worst").to_dict()
        else:
            raise NotATreeError(
                "worst objective supports methods tree-minimax and brute-force only")
    else:
        if method == "tree-minimax":
            raise NotATreeError("tree-minimax optimizes the worst objective; "
                                "use --objective worst")
        if method == "tree-greedy":
            from .tree_design import tree_greedy_average

            forest = ForestDecomposition.from_graph(g)
            if args.k > forest.p_u:
                raise BudgetError(f"budget {args.k} exceeds forest order {forest.p_u}")
            chosen, steps, value = tree_greedy_average(forest, args.k)
            report = {
                "targets": [g.vertex_names[v] for v in chosen],
                "objective": "average",
                "objective_value": float(value),
                "objective_exact": str(value),
                "method": "tree-greedy",
                "evaluations": len(steps),
                "per_step": [{"vertex": g.vertex_names[v],
                              "marginal": float(d),
                              "objective_after": float(o)} for v, d, o in steps],
                "params": {"k": args.k},
            }
        elif method == "brute-force":
            report = brute_force_design(g, args.k, "average", seed=seed).to_dict()
        elif method in ("greedy-exact", "greedy-unbiased", "greedy-fast", "lazy"):
            n = _design_samples(args, g)
            if method == "greedy-exact" or method == "lazy":
                evaluator = GainEvaluator(g, "exact")
            else:
                if n is None:
                    raise GraphFormatError(
                        "sampled methods need --samples or --eps-prime/--delta-prime")
                mode = "unbiased" if method == "greedy-unbiased" else "fast"
                evaluator = GainEvaluator(g, mode, samples=n, source=RandomSource(seed))
            design = lazy_greedy_design if method == "lazy" else greedy_design
            report = design(g, args.k, evaluator, seed=seed).to_dict()
        else:
            raise GraphFormatError(f"unknown method {args.method!r}")
    report["invocation"] = _provenance(args)
    _emit(report, args.out)
    print(f"designed {args.k} target(s) with {method} ({args.objective})",
          file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    g = load_graph(args.graph)
    truth = load_dag(args.truth)
    names = list(g.vertex_names)
    targets = []
    if args.targets:
        for name in args.targets.split(","):
            name = name.strip()
            if not name:
                continue
            if name not in names:
                raise GraphFormatError(f"unknown target vertex {name!r}")
            targets.append(names.index(name))
    result = interventional_essential_graph(g, targets, truth,
                                            trust_member=args.trust_member)
    resolved = sorted((g.vertex_names[a], g.vertex_names[b])
                      for a, b in result.newly_directed)
    payload = {
        "gain": len(result.newly_directed),
        "resolved_edges": [list(e) for e in resolved],
        "discovered_edge_ratio": discovered_edge_ratio(g, targets, truth,
                                                       trust_member=True),
        "invocation": _provenance(args),
    }
    _emit(payload, args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    config = GeneratorConfig(model=args.model, p=args.p, r=args.r,
                             degree_bound=args.degree_bound, seed=args.seed)
    graph = generate(config, RandomSource(args.seed).rng(0))
    save_graph(graph, args.out)
    print(f"wrote {args.model} instance with p={args.p} to {args.out}",
          file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    records = run_experiment(config, csv_path=args.out,
                             jsonl_path=args.jsonl,
                             measure_time=args.timings)
    summary = summarize(records)
    _emit(summary, None)
    print(f"wrote {len(records)} record(s) to {args.out}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mecdesign",
        description="Intervention-target design on Markov equivalence classes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_count = sub.add_parser("count", help="class size, optionally with a prior")
    p_count.add_argument("--graph", required=True)
    p_count.add_argument("--prior")
    p_count.set_defaults(func=cmd_count)

    p_sample = sub.add_parser("sample", help="draw class members as JSON lines")
    p_sample.add_argument("--graph", required=True)
    p_sample.add_argument("-n", type=int, default=1)
    p_sample.add_argument("--sampler", choices=["uniform", "fast"], default="uniform")
    p_sample.add_argument("--seed", type=_parse_seed, default=0)
    p_sample.add_argument("--out")
    p_sample.set_defaults(func=cmd_sample)

    p_design = sub.add_parser("design", help="choose intervention targets")
    p_design.add_argument("--graph", required=True)
    p_design.add_argument("-k", type=int, required=True)
    p_design.add_argument("--objective", choices=["average", "worst"], default="average")
    p_design.add_argument("--method", default="greedy-exact",
                          choices=["greedy-exact", "greedy-unbiased", "greedy-fast",
                                   "lazy", "brute-force", "tree-minimax", "tree-greedy"])
    p_design.add_argument("--samples", type=int)
    p_design.add_argument("--eps-prime", type=float, dest="eps_prime")
    p_design.add_argument("--delta-prime", type=float, dest="delta_prime")
    p_design.add_argument("--seed", type=_parse_seed, default=0)
    p_design.add_argument("--out")
    p_design.set_defaults(func=cmd_design)

    p_eval = sub.add_parser("evaluate", help="gain of a target set against a truth DAG")
    p_eval.add_argument("--graph", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--targets", default="")
    p_eval.add_argument("--trust-member", action="store_true")
    p_eval.add_argument("--out")
    p_eval.set_defaults(func=cmd_evaluate)

    p_gen = sub.add_parser("gen", help="generate a random instance")
    p_gen.add_argument("--model", required=True,
                       choices=["er-dag", "chordal-peo", "tree-ba", "tree-bounded-degree"])
    p_gen.add_argument("--p", type=int, required=True)
    p_gen.add_argument("--r", type=float)
    p_gen.add_argument("--degree-bound", type=int, dest="degree_bound")
    p_gen.add_argument("--seed", type=_parse_seed, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen)

    p_bench = sub.add_parser("bench", help="run a benchmark suite config")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--jsonl")
    p_bench.add_argument("--timings", action="store_true",
                         help="record wall-clock runtimes (breaks byte-identical reruns)")
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _threads()
        return args.func(args)
    except (GraphFormatError, InvalidEssentialGraphError, InconsistencyError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except (NotATreeError, NotAUcegError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except MecDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
