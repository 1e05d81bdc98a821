"""Operator-facing command line: experiment sweeps, comparison statistics,
design-space enumeration, the RPC server, and white-box solving.

Results are plain CSV so they diff and feed external analysis; everything
except wall-clock time is a pure function of the experiment file bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import problems as prob
from .assembly import (
    ConfigurationSpec,
    InvalidConfigurationError,
    Registry,
    UnknownComponentError,
    enumerate_valid,
    instantiate,
)
from .components import terminate_evaluations, terminate_iterations
from .env import EnvKey, EnvValue
from .frameworks import terminate_any
from .palette import default_registry, load_registry, registry_to_json
from .problems import ParseError, ProblemInstance
from .stats import interquartile_range, mann_whitney_u, median
from .whitebox import dispatch_solve, parse_model, ModelError
from .env import env_new

EXIT_OK = 0
EXIT_TRIAL_FAILURES = 1
EXIT_INPUT_ERROR = 2
EXIT_ENVIRONMENT_ERROR = 3

MIN_SEEDS_FOR_COMPARE = 5


def _build_problem(entry: Dict) -> ProblemInstance:
    kind = entry.get("kind")
    if kind == "onemax":
        return prob.onemax(int(entry["n"]))
    if kind == "checkerboard":
        return prob.checkerboard(int(entry["s"]))
    if kind == "royal_road":
        return prob.royal_road(int(entry["n"]), int(entry["b"]))
    if kind == "trap":
        return prob.trap(int(entry["n"]), int(entry["b"]))
    if kind == "hiff":
        return prob.hiff(int(entry["n"]))
    if kind == "sphere":
        return prob.sphere(int(entry["d"]), float(entry["lo"]), float(entry["hi"]))
    if kind == "magic_square":
        return prob.magic_square(int(entry["k"]))
    if kind == "dimacs":
        return prob.parse_dimacs_cnf(Path(entry["path"]).read_text())
    if kind == "tsplib":
        return prob.parse_tsplib(Path(entry["path"]).read_text())
    raise ValueError(f"unknown problem kind: {kind!r}")


def _parse_initializers(entries) -> Tuple[Tuple[EnvKey, EnvValue], ...]:
    return tuple(
        (EnvKey.parse(e["key"]), EnvValue.from_json(e["value"])) for e in entries or ()
    )


def _budget_terminate(budget: Optional[Dict]):
    parts = []
    if budget:
        if "iterations" in budget:
            parts.append(terminate_iterations(int(budget["iterations"])))
        if "evaluations" in budget:
            parts.append(terminate_evaluations(int(budget["evaluations"])))
    if not parts:
        return None
    return parts[0] if len(parts) == 1 else terminate_any(*parts)


def _configs_for(spec: Dict, registry: Registry) -> List[Tuple[str, ConfigurationSpec]]:
    if "configs" in spec:
        configs = [ConfigurationSpec.from_json(c) for c in spec["configs"]]
    else:
        configs = enumerate_valid(
            registry,
            spec["framework"],
            spec.get("grids", {}),
            initializers=_parse_initializers(spec.get("initializers")),
            framework_params=spec.get("framework_params", {}),
        )
    return [(f"{i:04d}-{c.content_hash()}", c) for i, c in enumerate(configs)]


def cmd_run(args) -> int:
    try:
        spec = json.loads(Path(args.experiment).read_text())
        problems = [( _build_problem(e)) for e in spec["problems"]]
        seeds = [int(s) for s in spec["seeds"]]
        if not problems or not seeds:
            raise ValueError("problems and seeds must be nonempty")
        registry = (
            load_registry(spec["registry"]) if spec.get("registry") else default_registry()
        )
        configs = _configs_for(spec, registry)
        budget = _budget_terminate(spec.get("budget"))
        stride = int(spec.get("trace_stride", 1))
        if stride < 1:
            raise ValueError("trace_stride must be >= 1")
        out_dir = Path(spec["out"])
        workers = int(spec.get("workers", 1))
    except (OSError, KeyError, ValueError, ParseError, UnknownComponentError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    trials = [
        (problem, config_id, config, seed)
        for problem in problems
        for config_id, config in configs
        for seed in seeds
    ]

    def execute(trial):
        problem, config_id, config, seed = trial
        start_clock = time.perf_counter()
        try:
            result = instantiate(
                config, registry, problem, seed, extra_terminate=budget
            )()
        except Exception as exc:
            return (problem.name, config_id, seed, None, None, None, str(exc))
        wall_ms = int((time.perf_counter() - start_clock) * 1000)
        rows = [
            row
            for i, row in enumerate(result.trace)
            if (i + 1) % stride == 0 or i == len(result.trace) - 1
        ]
        return (
            problem.name,
            config_id,
            seed,
            result.best_value,
            result.trace[-1][1] if result.trace else 1,
            wall_ms,
            rows,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(execute, trials))
    else:
        outcomes = [execute(t) for t in trials]

    out_dir.mkdir(parents=True, exist_ok=True)
    traces_dir = out_dir / "traces"
    traces_dir.mkdir(exist_ok=True)
    failures = 0
    outcomes.sort(key=lambda o: (o[0], o[1], o[2]))
    with open(out_dir / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["problem", "config_id", "seed", "best_value", "evaluations", "wall_ms"])
        for outcome in outcomes:
            problem_id, config_id, seed = outcome[:3]
            if outcome[3] is None:
                failures += 1
                writer.writerow([problem_id, config_id, seed, "FAILED", "", ""])
                continue
            best_value, evaluations, wall_ms, rows = outcome[3:]
            writer.writerow([problem_id, config_id, seed, repr(best_value), evaluations, wall_ms])
            trace_path = traces_dir / f"{problem_id}__{config_id}__{seed}.csv"
            with open(trace_path, "w", newline="") as tfh:
                twriter = csv.writer(tfh)
                twriter.writerow(["iteration", "evaluations", "best_value"])
                for iteration, evals, value in rows:
                    twriter.writerow([iteration, evals, repr(value)])
    return EXIT_TRIAL_FAILURES if failures else EXIT_OK


def cmd_compare(args) -> int:
    try:
        rows = list(csv.DictReader(open(args.results)))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    groups: Dict[str, List[float]] = {}
    for row in rows:
        if row["problem"] != args.problem or row["best_value"] == "FAILED":
            continue
        groups.setdefault(row["config_id"], []).append(float(row["best_value"]))
    config_ids = sorted(groups)
    if len(config_ids) < 2:
        print("error: need at least 2 configs for the named problem", file=sys.stderr)
        return EXIT_INPUT_ERROR
    for cid in config_ids:
        if len(groups[cid]) < MIN_SEEDS_FOR_COMPARE:
            print(
                f"error: config {cid} has {len(groups[cid])} seeds; "
                f"minimum is {MIN_SEEDS_FOR_COMPARE}",
                file=sys.stderr,
            )
            return EXIT_INPUT_ERROR
    print(f"problem: {args.problem}  metric: {args.metric}")
    print(f"{'config':<24} {'n':>4} {'median':>12} {'iqr':>12}")
    for cid in config_ids:
        xs = groups[cid]
        print(f"{cid:<24} {len(xs):>4} {median(xs):>12.6g} {interquartile_range(xs):>12.6g}")
    print("pairwise Mann-Whitney U (two-sided, tie-corrected normal approximation):")
    for i, a in enumerate(config_ids):
        for b in config_ids[i + 1 :]:
            r = mann_whitney_u(groups[a], groups[b])
            print(f"  {a} vs {b}: U={r.u:g} p={r.p:.6g}")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    try:
        registry = load_registry(args.registry)
        grids = json.loads(Path(args.grids).read_text()) if args.grids else {}
        initializers = (
            _parse_initializers(json.loads(Path(args.initializers).read_text()))
            if args.initializers
            else ()
        )
        configs = enumerate_valid(registry, args.framework, grids, initializers)
    except (OSError, KeyError, ValueError, UnknownComponentError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    out = {
        "count": len(configs),
        "configs": [
            {"id": f"{i:04d}-{c.content_hash()}", "spec": c.to_json()}
            for i, c in enumerate(configs)
        ],
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .rpc import serve

    try:
        registry = load_registry(args.registry) if args.registry else default_registry()
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    try:
        server = serve(registry, host=args.host, port=args.port)
    except OSError as exc:
        print(f"error: cannot bind port {args.port}: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT_ERROR
    print(f"serving on {server.endpoint}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.close()
    return EXIT_OK


def cmd_solve(args) -> int:
    try:
        text = Path(args.model).read_text()
        model = parse_model(text)
    except (OSError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    result, _env = dispatch_solve(model, args.budget, env_new(args.seed), penalty=args.penalty)
    if result.route == "tsp":
        from .whitebox import match_tsp, tsplib_explicit_text

        audit_path = Path(args.model).with_suffix(".tsplib")
        audit_path.write_text(tsplib_explicit_text(match_tsp(model)))
    print(
        json.dumps(
            {
                "route_taken": result.route,
                "assignment": result.assignment,
                "value": result.value,
                "violations": result.violations,
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="metafold")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment sweep")
    p_run.add_argument("experiment")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="summary statistics over results.csv")
    p_cmp.add_argument("results")
    p_cmp.add_argument("--problem", required=True)
    p_cmp.add_argument("--metric", default="final", choices=["final"])
    p_cmp.set_defaults(func=cmd_compare)

    p_enum = sub.add_parser("enumerate", help="enumerate valid configurations")
    p_enum.add_argument("registry")
    p_enum.add_argument("--framework", required=True)
    p_enum.add_argument("--grids")
    p_enum.add_argument("--initializers")
    p_enum.set_defaults(func=cmd_enumerate)

    p_srv = sub.add_parser("serve", help="host components over JSON-RPC")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, required=True)
    p_srv.add_argument("--registry")
    p_srv.set_defaults(func=cmd_serve)

    p_solve = sub.add_parser("solve", help="solve a declarative model")
    p_solve.add_argument("model")
    p_solve.add_argument("--budget", type=int, default=10000)
    p_solve.add_argument("--seed", type=int, default=1)
    p_solve.add_argument("--penalty", type=float, default=1000.0)
    p_solve.set_defaults(func=cmd_solve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
