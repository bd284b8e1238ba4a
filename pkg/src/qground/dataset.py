"""Supervised datasets of (state, quantified goal, optimal cost) samples.

An instance's reachable space is explored once; states are drawn uniformly
from it, goals are drawn from the domain's template (with a random subset of
variables pre-bound to random objects, so the data covers partially and
fully ground goals, including invalid bindings), and each pair is labeled by
the BFS oracle.  Unsatisfiable pairs get the finite dead-end cost, fixed
after generation as twice the largest finite cost in the dataset and
recorded in the metadata.

Visitall is the exception: its sampled states reset the visited set to the
robot's cell, which puts them outside the init-reachable space, so they are
labeled by forward BFS (with a static satisfiability precheck to decide
dead ends without exhausting the exponential visited-set space).

File format is JSON Lines: one metadata header record, then one record per
sample.  Generation is byte-reproducible for a fixed seed, and parallel
workers are merged by instance index so thread count does not matter.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import generators, goals, oracle, strips
from .generators import GeneratorConfig
from .seeding import derive_seed
from .strips import Problem, QuantifiedGoal, is_var, var_index, var_term


class DatasetError(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int = 2000
    n_instances: int = 50
    exploration_cap: int = 50_000
    bfs_cap: int = 300_000
    max_retries: int = 20
    val_fraction: float = 0.1


def paper_scale_sampler() -> SamplerConfig:
    # 40k samples with a 500-sample validation split; not meant to be run
    # on a desk machine, but the metadata must echo the split sizes.
    return SamplerConfig(
        n_samples=40_000, n_instances=400, exploration_cap=100_000, val_fraction=0.0125
    )


@dataclass(frozen=True)
class Sample:
    instance: str
    objects: tuple
    state: frozenset
    goal: QuantifiedGoal
    cost: int
    dead_end: bool


@dataclass
class Dataset:
    domain: object
    samples: list
    meta: dict


def dataset_metadata(gen_config: GeneratorConfig, sampler: SamplerConfig, seed: int, n_dead=None):
    val_size = int(round(sampler.n_samples * sampler.val_fraction))
    meta = {
        "format": "qground-dataset",
        "version": 1,
        "seed": int(seed),
        "domain": gen_config.domain,
        "n_dead": n_dead,
        "n_samples": sampler.n_samples,
        "train_size": sampler.n_samples - val_size,
        "val_size": val_size,
        "generator": asdict(gen_config),
        "sampler": asdict(sampler),
    }
    # normalize to JSON-native types so in-memory metadata equals reloaded
    return json.loads(json.dumps(meta))


def _visitall_reset_state(problem: Problem, cell: int) -> frozenset:
    domain = problem.domain
    at = domain.pred_id["at-robot"]
    visited = domain.pred_id["visited"]
    keep = frozenset(a for a in problem.init if a[0] not in (at, visited))
    return keep | {(at, cell), (visited, cell)}


def _visitall_satisfiable(problem: Problem, state, goal: QuantifiedGoal) -> bool:
    """Static decision: some valid binding with every required cell visited
    already or reachable from the robot.  Sound because visits accumulate."""
    domain = problem.domain
    visited = domain.pred_id["visited"]
    robot = generators._robot_cell(problem, state)
    reachable = set(generators._bfs_distances(generators._adjacency(problem), robot,
                                              problem.n_objects))
    fluent_atoms = [a for a in goal.atoms if domain.kind(a[0]) != strips.STATIC]
    for binding in goals.enumerate_valid_bindings(problem, goal, state):
        ok = True
        for atom in fluent_atoms:
            ground = (atom[0],) + tuple(
                binding[var_index(t)] if is_var(t) else t for t in atom[1:]
            )
            if ground[0] != visited:
                ok = ground in state
            else:
                ok = ground in state or ground[1] in reachable
            if not ok:
                break
        if ok:
            return True
    return False


def _generate_for_instance(gen_config, sampler, root_seed, index, quota):
    """All samples of one instance; a pure function of its arguments, so
    workers can run in any order or process and still merge identically."""
    is_visitall = gen_config.domain == "visitall"
    problem = space = None
    for retry in range(sampler.max_retries):
        inst_seed = derive_seed(root_seed, "instance", index, retry)
        try:
            problem = generators.generate_instance(gen_config, inst_seed)
        except generators.GeneratorError:
            continue
        if is_visitall:
            space = None
            break
        space = oracle.explore(problem, cap=sampler.exploration_cap)
        if not space.truncated:
            break
        problem = None
    if problem is None:
        raise DatasetError(
            f"instance {index}: exploration cap {sampler.exploration_cap} exceeded "
            f"or generation failed after {sampler.max_retries} retries"
        )
    actions = strips.ground_actions(problem) if is_visitall else None
    instance_id = f"{problem.name}#{index}"
    out = []
    for s in range(quota):
        for retry in range(sampler.max_retries):
            rng = np.random.default_rng(derive_seed(root_seed, "sample", index, s, retry))
            if is_visitall:
                cell = int(rng.integers(problem.n_objects))
                state = _visitall_reset_state(problem, cell)
                try:
                    goal = generators.sample_goal(problem, gen_config, rng, partial=True)
                except generators.GeneratorError:
                    continue
                if not _visitall_satisfiable(problem, state, goal):
                    cost = None
                else:
                    res = oracle.bfs_cost_from_state(
                        problem, state, goal, cap=sampler.bfs_cap, actions=actions
                    )
                    if not res.exact:
                        continue
                    cost = res.value
            else:
                state = space.states[int(rng.integers(len(space.states)))]
                try:
                    goal = generators.sample_goal(problem, gen_config, rng, partial=True)
                except generators.GeneratorError:
                    continue
                costs, exact = oracle.optimal_costs(space, goal)
                if not exact:
                    continue
                cost = costs[space.index[state]]
            out.append(Sample(instance_id, problem.objects, state, goal, cost, cost is None))
            break
        else:
            raise DatasetError(f"instance {index}: could not label sample {s}")
    return out


def generate_dataset(
    gen_config: GeneratorConfig,
    sampler: SamplerConfig,
    seed: int,
    threads: int = 1,
) -> Dataset:
    gen_config.validate()
    n, n_inst = sampler.n_samples, max(1, sampler.n_instances)
    quotas = [n // n_inst + (1 if i < n % n_inst else 0) for i in range(n_inst)]
    jobs = [(i, q) for i, q in enumerate(quotas) if q > 0]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_generate_for_instance, gen_config, sampler, seed, i, q)
                for i, q in jobs
            ]
            per_instance = [f.result() for f in futures]
    else:
        per_instance = [
            _generate_for_instance(gen_config, sampler, seed, i, q) for i, q in jobs
        ]
    raw = [s for chunk in per_instance for s in chunk]
    max_finite = max((s.cost for s in raw if s.cost is not None), default=0)
    n_dead = max(2 * max_finite, 1)
    samples = [
        Sample(s.instance, s.objects, s.state, s.goal, n_dead if s.dead_end else s.cost,
               s.dead_end)
        for s in raw
    ]
    meta = dataset_metadata(gen_config, sampler, seed, n_dead=n_dead)
    return Dataset(generators.builtin_domain(gen_config.domain), samples, meta)


# ---------------------------------------------------------------------------
# JSON Lines serialization.


def _atom_to_names(domain, atom, objects, variables):
    name = domain.predicates[atom[0]].name
    return [name] + [
        variables[var_index(t)] if is_var(t) else objects[t] for t in atom[1:]
    ]


def _sample_record(domain, s: Sample) -> dict:
    goal = s.goal
    term = lambda t: goal.variables[var_index(t)] if is_var(t) else s.objects[t]
    return {
        "instance": s.instance,
        "objects": list(s.objects),
        "state": [_atom_to_names(domain, a, s.objects, ()) for a in sorted(s.state)],
        "goal": {
            "vars": list(goal.variables),
            "atoms": [_atom_to_names(domain, a, s.objects, goal.variables) for a in goal.atoms],
            "neq": [[term(a), term(b)] for a, b in goal.neq],
        },
        "cost": s.cost,
        "dead_end": s.dead_end,
    }


def dumps_dataset(dataset: Dataset) -> str:
    lines = [json.dumps({"meta": dataset.meta}, sort_keys=True)]
    for s in dataset.samples:
        lines.append(json.dumps(_sample_record(dataset.domain, s), sort_keys=True))
    return "\n".join(lines) + "\n"


def write_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_dataset(dataset))


def _record_to_sample(domain, rec: dict) -> Sample:
    objects = tuple(rec["objects"])
    obj_id = {o: i for i, o in enumerate(objects)}
    variables = tuple(rec["goal"]["vars"])
    var_id = {v: i for i, v in enumerate(variables)}

    def term(name):
        if name in var_id:
            return var_term(var_id[name])
        return obj_id[name]

    def atom(parts):
        return (domain.pred(parts[0]),) + tuple(term(t) for t in parts[1:])

    state = frozenset(atom(parts) for parts in rec["state"])
    neq = tuple(
        sorted(
            (min(term(a), term(b)), max(term(a), term(b))) for a, b in rec["goal"]["neq"]
        )
    )
    goal = QuantifiedGoal(
        variables, tuple(atom(parts) for parts in rec["goal"]["atoms"]), neq
    )
    return Sample(rec["instance"], objects, state, goal, rec["cost"], rec["dead_end"])


def load_dataset(path, domain=None) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise DatasetError(f"{path}: empty dataset file")
    header = json.loads(lines[0])
    if "meta" not in header:
        raise DatasetError(f"{path}: missing metadata header record")
    meta = header["meta"]
    if domain is None:
        domain = generators.builtin_domain(meta["domain"])
    samples = [_record_to_sample(domain, json.loads(line)) for line in lines[1:]]
    return Dataset(domain, samples, meta)
