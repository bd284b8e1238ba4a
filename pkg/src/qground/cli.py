"""Command-line entry point: one binary, one subcommand per pipeline stage.

Every run derives all randomness from a single ``--seed`` through named
streams and writes a manifest next to its outputs, so results can be
reproduced exactly.  ``QGROUND_LOG`` (error/info/debug) controls verbosity.
Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

from . import __version__, dataset, evalharness, generators, goals, oracle, policy, rgnn, strips
from .seeding import derive_seed

log = logging.getLogger("qground")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _write_manifest(out_path, command, config):
    manifest = {
        "tool": "qground",
        "version": __version__,
        "command": command,
        "config": config,
    }
    path = str(out_path) + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _parse_range(text):
    parts = text.replace(",", " ").split()
    if len(parts) == 1:
        return (int(parts[0]), int(parts[0]))
    if len(parts) == 2:
        return (int(parts[0]), int(parts[1]))
    raise _UsageError(f"expected 'lo hi' or a single integer, got {text!r}")


def _load_flat_config(path):
    """TOML-like flat key=value file; '#' and ';' start comments."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].split(";", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _UsageError(f"{path}: malformed line {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip().strip('"')
    return out


_RANGE_KEYS = ("objects", "colors", "variables", "rooms", "packages")


def _generator_config(args) -> generators.GeneratorConfig:
    raw = {}
    if getattr(args, "config", None):
        raw.update(_load_flat_config(args.config))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise _UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    if getattr(args, "domain", None):
        raw["domain"] = args.domain
    if getattr(args, "neq", None):
        raw["neq"] = args.neq
    kwargs = {}
    for key, value in raw.items():
        if key in _RANGE_KEYS:
            kwargs[key] = _parse_range(value)
        elif key in ("domain", "neq", "room_graph"):
            kwargs[key] = value
        elif key == "max_retries":
            kwargs[key] = int(value)
        else:
            raise _UsageError(f"unknown generator config key {key!r}")
    return generators.GeneratorConfig(**kwargs).validate()


def _resolve_domain(spec):
    if spec and os.path.exists(spec):
        with open(spec, encoding="utf-8") as fh:
            return strips.parse_domain(fh.read())
    return generators.builtin_domain(spec)


def _load_problem(args):
    with open(args.problem, encoding="utf-8") as fh:
        text = fh.read()
    domain = _resolve_domain(args.domain) if getattr(args, "domain", None) else None
    domain, problem = strips.parse_text(text, domain)
    if problem is None:
        raise _UsageError(f"{args.problem}: no problem definition found")
    return problem


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_gen_instances(args):
    config = _generator_config(args)
    os.makedirs(args.out, exist_ok=True)
    domain = generators.builtin_domain(config.domain)
    domain_path = os.path.join(args.out, "domain.pddl")
    with open(domain_path, "w", encoding="utf-8") as fh:
        fh.write(strips.print_domain(domain))
    for i in range(args.count):
        problem = generators.generate_instance(config, derive_seed(args.seed, "instance", i))
        path = os.path.join(args.out, f"problem-{i:04d}.pddl")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(strips.print_problem(problem))
    _write_manifest(
        os.path.join(args.out, "instances"),
        "gen-instances",
        {"generator": asdict(config), "count": args.count, "seed": args.seed},
    )
    print(f"wrote {args.count} instances to {args.out}")
    return 0


def cmd_gen_dataset(args):
    config = _generator_config(args)
    sampler = dataset.SamplerConfig(
        n_samples=args.samples,
        n_instances=args.instances,
        exploration_cap=args.cap,
        val_fraction=args.val_fraction,
    )
    ds = dataset.generate_dataset(config, sampler, args.seed, threads=args.threads)
    dataset.write_dataset(ds, args.out)
    _write_manifest(args.out, "gen-dataset", ds.meta)
    dead = sum(1 for s in ds.samples if s.dead_end)
    print(
        f"wrote {len(ds.samples)} samples to {args.out} "
        f"(n_dead={ds.meta['n_dead']}, dead-end samples: {dead})"
    )
    return 0


def cmd_train(args):
    ds = dataset.load_dataset(args.dataset)
    signature = rgnn.encoding_signature(ds.domain)
    params = rgnn.init_params(
        signature,
        k=args.k,
        L=args.layers,
        alpha=args.alpha,
        n_dead=ds.meta["n_dead"],
        seed=args.seed,
    )
    config = rgnn.TrainConfig(
        lr=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        val_fraction=args.val_fraction,
    )
    best, logbook = rgnn.train(params, ds, config)
    rgnn.save_model(best, args.out)
    with open(str(args.out) + ".log.jsonl", "w", encoding="utf-8") as fh:
        for entry in logbook:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    _write_manifest(
        args.out,
        "train",
        {
            "dataset": str(args.dataset),
            "k": args.k,
            "L": args.layers,
            "alpha": args.alpha,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "lr": args.lr,
            "seed": args.seed,
            "dataset_meta": ds.meta,
        },
    )
    final = logbook[-1] if logbook else {}
    print(f"saved model to {args.out} (last epoch: {json.dumps(final, sort_keys=True)})")
    return 0


def cmd_ground(args):
    problem = _load_problem(args)
    params = rgnn.load_model(args.model)
    value_fn = policy.model_value_fn(params, problem)
    trace = policy.ground_goal(
        problem, problem.init, problem.goal, value_fn, prune_invalid=args.prune_invalid
    )
    print(policy.format_trace(trace, problem))
    return 0


def cmd_solve(args):
    problem = _load_problem(args)
    result = evalharness.plan(problem, mode=args.mode, timeout_s=args.timeout_secs)
    if result.status == "solved":
        for action in result.plan:
            print(action.name)
        print(f"cost: {result.cost}")
    else:
        print(result.status)
    return 0


def cmd_compile_dnf(args):
    problem = _load_problem(args)
    comp = goals.compile_dnf(problem)
    text = strips.print_domain(comp.problem.domain) + strips.print_problem(comp.problem)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    _write_manifest(
        args.out,
        "compile-dnf",
        {"problem": str(args.problem), "n_bindings": comp.n_bindings},
    )
    note = "" if comp.solvable_hint else " (no valid bindings: trivially unsolvable)"
    print(f"wrote {args.out} with {comp.n_bindings} binding actions{note}")
    return 0


def cmd_oracle(args):
    problem = _load_problem(args)
    res = oracle.bfs_cost_from_state(problem, problem.init, problem.goal, cap=args.cap)
    if res.value is not None:
        print(res.value)
    elif res.exact:
        print("dead-end")
    else:
        print("unknown (cap exceeded)")
    return 0


def cmd_eval(args):
    files = sorted(
        f for f in os.listdir(args.dir) if f.endswith(".pddl") and f != "domain.pddl"
    )
    with open(os.path.join(args.dir, "domain.pddl"), encoding="utf-8") as fh:
        domain = strips.parse_domain(fh.read())
    problems = []
    for f in files:
        with open(os.path.join(args.dir, f), encoding="utf-8") as fh:
            problems.append(strips.parse_problem(fh.read(), domain))
    params = rgnn.load_model(args.model)
    settings = evalharness.EvalSettings(
        planner_mode=args.mode,
        timeout_s=args.timeout_secs,
        ratio_reference=args.ratio,
        prune_invalid=args.prune_invalid,
    )
    report = evalharness.evaluate(
        problems,
        lambda problem, i: policy.model_value_fn(params, problem),
        settings,
        label="learned",
    )
    rows = list(report.rows)
    records = list(report.records)
    if args.baselines:
        for base in evalharness.random_baselines(problems, settings, args.seed).values():
            rows.extend(base.rows)
            records.extend(base.records)
    if args.speedup:
        ratios = []
        for problem in problems:
            res = evalharness.speedup(
                problem,
                policy.model_value_fn(params, problem),
                mode=args.mode,
                timeout_s=args.timeout_secs,
            )
            if res.ratio is not None:
                ratios.append(res.ratio)
        if ratios:
            ratios.sort()
            rows.append(
                {
                    "label": "speedup(compiled/grounded)",
                    "count": len(ratios),
                    "coverage": None,
                    "mean_reference": None,
                    "mean_ratio": ratios[len(ratios) // 2],
                    "ratio_count": len(ratios),
                }
            )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write(evalharness.rows_to_csv(rows))
    markdown = evalharness.rows_to_markdown(rows)
    with open(os.path.join(args.out, "report.md"), "w", encoding="utf-8") as fh:
        fh.write(markdown)
    with open(os.path.join(args.out, "records.jsonl"), "w", encoding="utf-8") as fh:
        fh.write(evalharness.records_to_jsonl(records))
    _write_manifest(
        os.path.join(args.out, "report"),
        "eval",
        {"dir": str(args.dir), "model": str(args.model), "seed": args.seed,
         "mode": args.mode, "ratio": args.ratio},
    )
    print(markdown, end="")
    return 0


def cmd_selfcheck(args):
    from . import selfcheck

    return selfcheck.run()


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="qground", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        return p

    p = add("gen-instances", cmd_gen_instances, help="generate domain/problem files")
    p.add_argument("--domain", help="builtin domain name")
    p.add_argument("--config", help="flat key=value generator config file")
    p.add_argument("--set", action="append", help="override a config key (key=value)")
    p.add_argument("--neq", choices=["none", "all-pairs"])
    p.add_argument("--count", type=int, default=10)
    p.add_argument("-o", "--out", required=True)

    p = add("gen-dataset", cmd_gen_dataset, help="generate a labeled training dataset")
    p.add_argument("--domain", help="builtin domain name")
    p.add_argument("--config", help="flat key=value generator config file")
    p.add_argument("--set", action="append")
    p.add_argument("--neq", choices=["none", "all-pairs"])
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--cap", type=int, default=50_000)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("-o", "--out", required=True)

    p = add("train", cmd_train, help="train the value network on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--layers", type=int, default=10)
    p.add_argument("--alpha", type=float, default=12.0)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--val-fraction", type=float, default=None)
    p.add_argument("-o", "--out", required=True)

    p = add("ground", cmd_ground, help="greedily ground a problem's goal with a model")
    p.add_argument("--problem", required=True)
    p.add_argument("--domain")
    p.add_argument("--model", required=True)
    p.add_argument("--prune-invalid", action="store_true")

    p = add("solve", cmd_solve, help="plan for a problem with a ground goal")
    p.add_argument("--problem", required=True)
    p.add_argument("--domain")
    p.add_argument("--mode", choices=["optimal-bfs", "gbfs-goalcount"], default="optimal-bfs")
    p.add_argument("--timeout-secs", type=float, default=60.0)

    p = add("compile-dnf", cmd_compile_dnf, help="compile the quantified goal away")
    p.add_argument("--problem", required=True)
    p.add_argument("--domain")
    p.add_argument("-o", "--out", required=True)

    p = add("oracle", cmd_oracle, help="print the optimal cost of a problem's goal")
    p.add_argument("--problem", required=True)
    p.add_argument("--domain")
    p.add_argument("--cap", type=int, default=500_000)

    p = add("eval", cmd_eval, help="evaluate a model on an instance directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--mode", choices=["optimal-bfs", "gbfs-goalcount"], default="optimal-bfs")
    p.add_argument("--timeout-secs", type=float, default=60.0)
    p.add_argument("--ratio", choices=["optimal", "compiled"], default="optimal")
    p.add_argument("--baselines", action="store_true")
    p.add_argument("--speedup", action="store_true")
    p.add_argument("--prune-invalid", action="store_true")
    p.add_argument("-o", "--out", required=True)

    add("selfcheck", cmd_selfcheck, help="run the built-in gradient/invariant checks")
    return parser


def main(argv=None) -> int:
    level = os.environ.get("QGROUND_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(name)s %(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args) or 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        if os.environ.get("QGROUND_LOG", "").lower() == "debug":
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
