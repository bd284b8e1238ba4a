"""Evaluation harness: internal planners, metrics, baselines, and timing.

Coverage counts an instance as solved when the planner solves the problem
under the model's goal grounding within the timeout, which jointly tests
that the grounding is valid and reachable.  Quality is the ratio of the
achieved cost to a reference: the optimal cost of the quantified goal on
small instances, or a non-optimal planner run on the DNF-compiled problem
on larger ones.  Ratios are averaged only over instances solved on both
sides; zero-cost references contribute ratio 1 when the achieved cost is
also zero and are otherwise excluded and counted separately.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import goals, oracle, policy, strips
from .goals import compile_dnf
from .seeding import derive_seed
from .strips import Problem, QuantifiedGoal, is_var


@dataclass
class PlanResult:
    status: str  # "solved" | "unsolvable" | "timeout"
    plan: list | None
    cost: int | None
    expanded: int
    elapsed: float


def _ground_goal_test(goal: QuantifiedGoal):
    if not goal.is_ground:
        raise ValueError("planner requires a fully ground goal")
    atoms = frozenset(goal.atoms)
    for a, b in goal.neq:
        if a == b:
            return None  # unsatisfiable
    return atoms


def _extract_rest(parents, state, plan):
    while parents[state] is not None:
        prev, action = parents[state]
        plan.append(action)
        state = prev
    plan.reverse()
    return plan


def plan(problem: Problem, mode="optimal-bfs", timeout_s=60.0, goal=None,
         actions=None) -> PlanResult:
    """Plan for a ground goal.

    ``optimal-bfs`` is breadth-first search with duplicate detection: it
    returns a shortest plan or proves unsolvability by exhausting the
    reachable space.  ``gbfs-goalcount`` is greedy best-first search on the
    number of unsatisfied goal atoms; complete but not optimal.
    """
    goal = problem.goal if goal is None else goal
    goal_atoms = _ground_goal_test(goal)
    start = time.monotonic()
    if goal_atoms is None:
        return PlanResult("unsolvable", None, None, 0, time.monotonic() - start)
    if actions is None:
        actions = strips.ground_actions(problem)
    init = problem.init
    if goal_atoms <= init:
        return PlanResult("solved", [], 0, 0, time.monotonic() - start)
    deadline = start + timeout_s
    parents = {init: None}
    expanded = 0

    if mode == "optimal-bfs":
        frontier = deque([init])
        while frontier:
            state = frontier.popleft()
            expanded += 1
            if expanded % 512 == 0 and time.monotonic() > deadline:
                return PlanResult("timeout", None, None, expanded, time.monotonic() - start)
            for action in actions:
                if not action.pre <= state:
                    continue
                nxt = (state - action.delete) | action.add
                if nxt in parents:
                    continue
                parents[nxt] = (state, action)
                if goal_atoms <= nxt:
                    found = _extract_rest(parents, nxt, [])
                    return PlanResult(
                        "solved", found, len(found), expanded, time.monotonic() - start
                    )
                frontier.append(nxt)
        return PlanResult("unsolvable", None, None, expanded, time.monotonic() - start)

    if mode == "gbfs-goalcount":
        h0 = len(goal_atoms - init)
        counter = 0
        heap = [(h0, counter, init)]
        while heap:
            _, _, state = heapq.heappop(heap)
            expanded += 1
            if expanded % 512 == 0 and time.monotonic() > deadline:
                return PlanResult("timeout", None, None, expanded, time.monotonic() - start)
            if goal_atoms <= state:
                found = _extract_rest(parents, state, [])
                return PlanResult(
                    "solved", found, len(found), expanded, time.monotonic() - start
                )
            for action in actions:
                if not action.pre <= state:
                    continue
                nxt = (state - action.delete) | action.add
                if nxt in parents:
                    continue
                parents[nxt] = (state, action)
                counter += 1
                heapq.heappush(heap, (len(goal_atoms - nxt), counter, nxt))
        return PlanResult("unsolvable", None, None, expanded, time.monotonic() - start)

    raise ValueError(f"unknown planner mode {mode!r}")


# ---------------------------------------------------------------------------
# Evaluation.


@dataclass(frozen=True)
class EvalSettings:
    planner_mode: str = "optimal-bfs"
    timeout_s: float = 60.0
    ratio_reference: str = "optimal"  # or "compiled": plan the DNF compilation
    oracle_cap: int = 500_000
    dnf_cap: int = 10**6
    prune_invalid: bool = False


def _reference_cost(problem, settings):
    """(cost, solved, status) of the reference side for the quality ratio."""
    if settings.ratio_reference == "optimal":
        res = oracle.bfs_cost_from_state(
            problem, problem.init, problem.goal, cap=settings.oracle_cap
        )
        if res.value is not None:
            return res.value, True, "optimal"
        return None, False, "dead-end" if res.exact else "cap-exceeded"
    comp = compile_dnf(problem, cap=settings.dnf_cap)
    pr = plan(comp.problem, mode=settings.planner_mode, timeout_s=settings.timeout_s)
    return pr.cost, pr.status == "solved", pr.status


def _ratio(achieved, reference):
    if reference is None or achieved is None:
        return None
    if reference == 0:
        return 1.0 if achieved == 0 else None
    return achieved / reference


@dataclass
class EvalReport:
    label: str
    rows: list
    records: list


def _aggregate(label, records) -> dict:
    n = len(records)
    covered = [r for r in records if r["covered"]]
    ratios = [r["ratio"] for r in records if r["ratio"] is not None]
    refs = [r["reference_cost"] for r in records if r["reference_cost"] is not None]
    return {
        "label": label,
        "count": n,
        "coverage": len(covered) / n if n else 0.0,
        "mean_reference": sum(refs) / len(refs) if refs else None,
        "mean_ratio": sum(ratios) / len(ratios) if ratios else None,
        "ratio_count": len(ratios),
    }


def evaluate(problems, value_fn_for, settings: EvalSettings, label="model") -> EvalReport:
    """Ground each instance's goal, plan for the grounding, and aggregate.

    ``value_fn_for(problem, index)`` supplies the value function (a trained
    model, the exact oracle, or a baseline sampler in disguise).
    """
    records = []
    for i, problem in enumerate(problems):
        ref_cost, ref_solved, ref_status = _reference_cost(problem, settings)
        result = policy.ground_and_solve(
            problem,
            value_fn_for(problem, i),
            mode=settings.planner_mode,
            timeout_s=settings.timeout_s,
            prune_invalid=settings.prune_invalid,
        )
        covered = result.solved
        achieved = result.plan_result.cost if covered else None
        record = {
            "index": i,
            "instance": problem.name,
            "n_vars": len(problem.goal.variables),
            "n_objects": problem.n_objects,
            "covered": covered,
            "plan_status": result.plan_result.status,
            "achieved_cost": achieved,
            "reference_cost": ref_cost,
            "reference_solved": ref_solved,
            "reference_status": ref_status,
            "ratio": _ratio(achieved, ref_cost) if covered and ref_solved else None,
            "grounding": [(s.variable, s.obj) for s in result.trace.steps],
        }
        records.append(record)
    return EvalReport(label, [_aggregate(label, records)], records)


def random_binding_value_fn(problem, rng, valid_only, cap=100_000):
    """A "value function" that makes greedy grounding reproduce a uniformly
    random binding: it scores one pre-drawn binding 0 and everything else 1.
    """
    n = problem.n_objects
    goal = problem.goal
    if valid_only:
        try:
            all_bindings = list(goals.enumerate_valid_bindings(problem, goal, cap=cap))
        except goals.BindingLimitExceeded:
            all_bindings = []
        binding = (
            all_bindings[int(rng.integers(len(all_bindings)))] if all_bindings else None
        )
    else:
        binding = {v: int(rng.integers(n)) for v in range(len(goal.variables))}

    def fn(state, bound_goal):
        if binding is None:
            return 1.0
        # Prefer successors consistent with the drawn binding: compare the
        # candidate's ground terms for each original variable.
        for atom, orig in zip(bound_goal.atoms, goal.atoms):
            for t_new, t_old in zip(atom[1:], orig[1:]):
                if is_var(t_old) and not is_var(t_new):
                    if binding[strips.var_index(t_old)] != t_new:
                        return 1.0
        return 0.0

    return fn


def random_baselines(problems, settings: EvalSettings, seed: int):
    """Coverage/ratio rows for uniformly random groundings: "all" draws any
    total binding, "valid" draws among statically valid ones (an instance
    with no valid binding counts as unsolved)."""
    reports = {}
    for label, valid_only in (("random-all", False), ("random-valid", True)):
        def value_fn_for(problem, index, _valid=valid_only, _label=label):
            rng = np.random.default_rng(derive_seed(seed, _label, index))
            return random_binding_value_fn(problem, rng, _valid)

        reports[label] = evaluate(problems, value_fn_for, settings, label=label)
    return reports


# ---------------------------------------------------------------------------
# Grounded-vs-compiled timing.


@dataclass
class SpeedupResult:
    t_grounded: float
    t_compiled: float
    ratio: float | None
    grounded_status: str
    compiled_status: str
    censored: bool


def speedup(problem, value_fn, mode="gbfs-goalcount", timeout_s=60.0, runs=3,
            dnf_cap=10**6) -> SpeedupResult:
    """Median wall-clock of (ground then plan) vs (compile DNF then plan)."""
    grounded_times, compiled_times = [], []
    grounded_status = compiled_status = "solved"
    for _ in range(runs):
        t0 = time.perf_counter()
        trace = policy.ground_goal(problem, problem.init, problem.goal, value_fn)
        pr = plan(problem, mode=mode, timeout_s=timeout_s, goal=trace.final_goal)
        grounded_times.append(time.perf_counter() - t0)
        grounded_status = pr.status

        t0 = time.perf_counter()
        comp = compile_dnf(problem, cap=dnf_cap)
        pc = plan(comp.problem, mode=mode, timeout_s=timeout_s)
        compiled_times.append(time.perf_counter() - t0)
        compiled_status = pc.status
    t_grounded = sorted(grounded_times)[len(grounded_times) // 2]
    t_compiled = sorted(compiled_times)[len(compiled_times) // 2]
    censored = grounded_status == "timeout" or compiled_status == "timeout"
    ratio = None if censored else t_compiled / t_grounded
    return SpeedupResult(t_grounded, t_compiled, ratio, grounded_status, compiled_status,
                         censored)


# ---------------------------------------------------------------------------
# Report writers.


_COLUMNS = ["label", "count", "coverage", "mean_reference", "mean_ratio", "ratio_count"]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_COLUMNS, extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def rows_to_markdown(rows) -> str:
    def fmt(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.3f}"
        return str(v)

    lines = ["| " + " | ".join(_COLUMNS) + " |",
             "|" + "|".join("---" for _ in _COLUMNS) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(fmt(row.get(c)) for c in _COLUMNS) + " |")
    return "\n".join(lines) + "\n"


def records_to_jsonl(records) -> str:
    return "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n"
