"""Greedy goal grounding: bind one variable at a time by value argmin.

Each step scores every (variable, object) single binding with the value
function and keeps the minimizer, lexicographic (variable order, object
order) on ties; the state itself never changes, only the goal.  No search
and, by default, no validity pruning: choosing bindings that respect
colors and inequalities is the value function's job.  An optional pruning
flag exists for ablations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import goals, oracle, rgnn, strips
from .strips import Problem, QuantifiedGoal, is_var


@dataclass(frozen=True)
class TraceStep:
    variable: str
    obj: str
    value: float


@dataclass
class GroundingTrace:
    steps: list
    final_goal: QuantifiedGoal
    candidate_counts: list


def _statically_valid(problem: Problem, state, goal: QuantifiedGoal) -> bool:
    """Partial validity: every fully ground static atom holds and no ground
    neq pair collapsed to equal constants."""
    domain = problem.domain
    statics = problem.statics if state is None else frozenset(
        a for a in state if domain.kind(a[0]) == strips.STATIC
    )
    for a in goal.atoms:
        if domain.kind(a[0]) == strips.STATIC and not any(is_var(t) for t in a[1:]):
            if a not in statics:
                return False
    for a, b in goal.neq:
        if not is_var(a) and not is_var(b) and a == b:
            return False
    return True


def successors(problem: Problem, state, goal: QuantifiedGoal, prune_invalid=False):
    """All single-variable bindings paired with the resulting goal,
    in lexicographic (variable order, object order)."""
    if goal.is_ground:
        raise ValueError("no variables to bind")
    out = []
    for v in range(len(goal.variables)):
        for obj in range(problem.n_objects):
            bound = goals.ground(goal, {v: obj})
            if prune_invalid and not _statically_valid(problem, state, bound):
                continue
            out.append((v, obj, bound))
    return out


def ground_goal(problem, state, goal, value_fn, prune_invalid=False) -> GroundingTrace:
    steps = []
    counts = []
    current = goal
    while current.variables:
        cand = successors(problem, state, current, prune_invalid)
        if not cand:  # everything pruned away; bind something anyway
            cand = successors(problem, state, current, False)
        counts.append(len(cand))
        best = None
        for v, obj, bound in cand:
            value = value_fn(state, bound)
            if best is None or value < best[0]:
                best = (value, v, obj, bound)
        value, v, obj, bound = best
        steps.append(TraceStep(current.variables[v], problem.objects[obj], float(value)))
        current = bound
    return GroundingTrace(steps, current, counts)


def model_value_fn(params: rgnn.ModelParams, problem: Problem):
    rgnn.check_signature(params, problem.domain)
    domain, n = problem.domain, problem.n_objects

    def fn(state, goal):
        return rgnn.predict(params, domain, n, state, goal)

    return fn


def oracle_value_fn(space: oracle.ReachableSpace, dead_value=math.inf):
    """Exact V* as a drop-in value function (states must be in the space)."""

    def fn(state, goal):
        res = oracle.optimal_cost(space, state, goal)
        return float(res.value) if res.value is not None else dead_value

    return fn


@dataclass
class GroundSolveResult:
    trace: GroundingTrace
    plan_result: object

    @property
    def solved(self):
        return self.plan_result.status == "solved"


def ground_and_solve(problem, value_fn, mode="optimal-bfs", timeout_s=60.0,
                     prune_invalid=False) -> GroundSolveResult:
    from . import evalharness

    trace = ground_goal(problem, problem.init, problem.goal, value_fn, prune_invalid)
    result = evalharness.plan(problem, mode=mode, timeout_s=timeout_s, goal=trace.final_goal)
    return GroundSolveResult(trace, result)


def format_trace(trace: GroundingTrace, problem: Problem) -> str:
    lines = ["step  variable  object  value"]
    for i, step in enumerate(trace.steps):
        lines.append(f"{i:>4}  {step.variable:<8}  {step.obj:<6}  {step.value:.4f}")
    goal_problem = strips.Problem(
        problem.domain, problem.name, problem.objects, problem.init,
        trace.final_goal, problem.obj_id,
    )
    goal_text = strips.print_problem(goal_problem).splitlines()[-2].strip()
    lines.append(f"final {goal_text}")
    return "\n".join(lines)
