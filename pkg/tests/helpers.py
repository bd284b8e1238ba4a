"""Shared test utilities: tiny hand-written instances and brute-force oracles."""

import itertools

import numpy as np

from qground import strips
from qground.strips import is_var, var_index

VISITALL_1X3 = """
(define (problem strip-1x3) (:domain visitall)
  (:objects c0 c1 c2)
  (:init (connected c0 c1) (connected c1 c0) (connected c1 c2) (connected c2 c1)
         (blue c0) (blue c1) (red c2)
         (at-robot c0) (visited c0))
  (:goal (exists (?x) (and (red ?x) (visited ?x)))))
"""

VISITALL_2X2 = """
(define (problem grid-2x2) (:domain visitall)
  (:objects c00 c01 c10 c11)
  (:init (connected c00 c01) (connected c01 c00) (connected c00 c10) (connected c10 c00)
         (connected c01 c11) (connected c11 c01) (connected c10 c11) (connected c11 c10)
         (blue c00) (blue c01) (red c10) (red c11)
         (at-robot c00) (visited c00))
  (:goal (exists (?x) (and (red ?x) (visited ?x)))))
"""

COLORING_DOMAIN = """
(define (domain coloring)
  (:predicates (color ?v ?c))
  (:static color))
"""


def coloring_problem(n_vertices, n_colors, edges):
    """Action-less graph coloring: goal variables pick a color per vertex."""
    vertices = [f"v{i}" for i in range(n_vertices)]
    hues = [f"h{i}" for i in range(n_colors)]
    init = " ".join(f"(color {v} {h})" for v in vertices for h in hues)
    variables = " ".join(f"?x{i}" for i in range(n_vertices))
    atoms = " ".join(f"(color v{i} ?x{i})" for i in range(n_vertices))
    neq = " ".join(f"(neq ?x{a} ?x{b})" for a, b in edges)
    text = (
        f"(define (problem k-coloring) (:domain coloring)\n"
        f"  (:objects {' '.join(vertices + hues)})\n"
        f"  (:init {init})\n"
        f"  (:goal (exists ({variables}) (and {atoms} {neq}))))"
    )
    domain = strips.parse_domain(COLORING_DOMAIN)
    return strips.parse_problem(text, domain)


def brute_force_satisfies(state, goal, n_objects):
    """Exhaustive check over all |O|^|X| bindings; the reference oracle."""
    nvars = len(goal.variables)
    for combo in itertools.product(range(n_objects), repeat=nvars):
        ok = True
        for atom in goal.atoms:
            ground = (atom[0],) + tuple(
                combo[var_index(t)] if is_var(t) else t for t in atom[1:]
            )
            if ground not in state:
                ok = False
                break
        if ok:
            for a, b in goal.neq:
                va = combo[var_index(a)] if is_var(a) else a
                vb = combo[var_index(b)] if is_var(b) else b
                if va == vb:
                    ok = False
                    break
        if ok:
            return dict(enumerate(combo))
    return None


def independent_bfs_cost(problem, state, goal_test, cap=1_000_000):
    """Plain dict-based BFS written independently of qground.oracle."""
    actions = strips.ground_actions(problem)
    if goal_test(state):
        return 0
    seen = {state}
    frontier = [(state, 0)]
    for current, depth in frontier:
        for action in actions:
            if action.pre <= current:
                nxt = (current - action.delete) | action.add
                if nxt not in seen:
                    if goal_test(nxt):
                        return depth + 1
                    seen.add(nxt)
                    if len(seen) > cap:
                        raise RuntimeError("cap exceeded")
                    frontier.append((nxt, depth + 1))
    return None


def finite_difference(fn, array, h=1e-5):
    """Central finite differences of scalar fn() with respect to `array`."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        up = fn()
        flat[i] = old - h
        down = fn()
        flat[i] = old
        gflat[i] = (up - down) / (2 * h)
    return grad


def max_rel_err(analytic, numeric):
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return float(np.max(np.abs(analytic - numeric) / scale))
