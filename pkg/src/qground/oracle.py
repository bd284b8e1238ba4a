"""Optimal-cost oracle: explicit reachable spaces and breadth-first search.

Costs are unit (plan length).  A goal that no reachable state satisfies is a
dead end, reported as None here; dataset assembly turns that into the finite
"large cost" label recorded in the dataset metadata.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import goals, strips
from .strips import Problem, QuantifiedGoal


@dataclass
class ReachableSpace:
    """Explicit state graph from a problem's initial state.

    States are listed in BFS discovery order, so the layout is deterministic.
    If exploration stopped at the cap, ``truncated`` is True and every stored
    state is still fully expanded (transitions leading outside the stored set
    are simply dropped).
    """

    problem: Problem
    actions: tuple
    states: list
    index: dict
    successors: list  # successors[i] = list of (action_idx, state_idx)
    truncated: bool
    _predecessors: list | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.states)

    def predecessors(self):
        if self._predecessors is None:
            preds = [[] for _ in self.states]
            for src, succs in enumerate(self.successors):
                for _, dst in succs:
                    preds[dst].append(src)
            self._predecessors = preds
        return self._predecessors


def explore(problem: Problem, cap: int = 100_000) -> ReachableSpace:
    if cap < 1:
        raise ValueError("cap must be >= 1")
    actions = strips.ground_actions(problem)
    states = [problem.init]
    index = {problem.init: 0}
    successors = []
    truncated = False
    cursor = 0
    while cursor < len(states):
        state = states[cursor]
        succs = []
        for ai, action in enumerate(actions):
            if not action.pre <= state:
                continue
            nxt = (state - action.delete) | action.add
            dst = index.get(nxt)
            if dst is None:
                if len(states) < cap:
                    dst = len(states)
                    index[nxt] = dst
                    states.append(nxt)
                else:
                    truncated = True
                    continue
            succs.append((ai, dst))
        successors.append(succs)
        cursor += 1
    return ReachableSpace(problem, actions, states, index, successors, truncated)


@dataclass(frozen=True)
class CostResult:
    value: int | None  # None = dead end
    exact: bool


def optimal_costs(space: ReachableSpace, goal: QuantifiedGoal) -> tuple[list, bool]:
    """V* for every state in the space at once.

    Marks the goal-satisfying states, then runs one reverse multi-source BFS
    over the explicit graph.  Returns (costs, exact); costs[i] is None for
    states that cannot reach the goal, and exact is False when the space was
    truncated (values are then only upper-bound-unsafe approximations).
    """
    n_objects = space.problem.n_objects
    dist = [None] * len(space.states)
    queue = deque()
    for i, state in enumerate(space.states):
        if goals.satisfies(state, goal, n_objects) is not None:
            dist[i] = 0
            queue.append(i)
    preds = space.predecessors()
    while queue:
        i = queue.popleft()
        d = dist[i] + 1
        for j in preds[i]:
            if dist[j] is None:
                dist[j] = d
                queue.append(j)
    return dist, not space.truncated


def optimal_cost(space: ReachableSpace, state, goal: QuantifiedGoal) -> CostResult:
    try:
        i = space.index[state]
    except KeyError:
        raise ValueError("state is not part of the explored space") from None
    dist, exact = optimal_costs(space, goal)
    return CostResult(dist[i], exact)


def bfs_cost_from_state(
    problem: Problem,
    state,
    goal: QuantifiedGoal,
    cap: int = 1_000_000,
    actions=None,
) -> CostResult:
    """Forward BFS from one state, stopping at the first satisfying state.

    Used where exploring a whole space is wasteful (a single query) or
    impossible (states outside the init-reachable space).  A dead end is
    exact only if the search exhausted the reachable set under the cap.
    """
    if actions is None:
        actions = strips.ground_actions(problem)
    n_objects = problem.n_objects
    if goals.satisfies(state, goal, n_objects) is not None:
        return CostResult(0, True)
    seen = {state}
    frontier = deque([(state, 0)])
    while frontier:
        current, d = frontier.popleft()
        for action in actions:
            if not action.pre <= current:
                continue
            nxt = (current - action.delete) | action.add
            if nxt in seen:
                continue
            if goals.satisfies(nxt, goal, n_objects) is not None:
                return CostResult(d + 1, True)
            if len(seen) >= cap:
                return CostResult(None, False)
            seen.add(nxt)
            frontier.append((nxt, d + 1))
    return CostResult(None, True)
