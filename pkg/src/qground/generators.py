"""Procedural instance and goal generators for the five colored domains.

Every generator is seeded and emits problems that parse and round-trip
through the textual format.  Goals follow fixed per-domain templates
(block chains, uncover-clear, ball destinations, package deliveries,
cells to visit), with colors drawn from the instance and an optional
all-pairs inequality constraint.

Also provides closed-form reference value functions for the visit-one-color
and visit-many-colors tasks, used as independent oracles against the BFS
cost oracle.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import goals, strips
from .strips import Problem, QuantifiedGoal, var_term

COLOR_NAMES = ("blue", "red", "green", "yellow", "purple", "orange")
_COLOR_DECLS = " ".join(f"({c} ?x)" for c in COLOR_NAMES)
_COLOR_LIST = " ".join(COLOR_NAMES)


class GeneratorError(RuntimeError):
    pass


BLOCKS_DOMAIN = f"""
(define (domain blocks)
  (:predicates (on ?x ?y) (ontable ?x) (clear ?x) (holding ?x) (handempty)
               {_COLOR_DECLS})
  (:static {_COLOR_LIST})
  (:action pickup :parameters (?x)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (holding ?x) (not (clear ?x)) (not (ontable ?x)) (not (handempty))))
  (:action putdown :parameters (?x)
    :precondition (and (holding ?x))
    :effect (and (clear ?x) (ontable ?x) (handempty) (not (holding ?x))))
  (:action stack :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (on ?x ?y) (clear ?x) (handempty) (not (holding ?x)) (not (clear ?y))))
  (:action unstack :parameters (?x ?y)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (on ?x ?y)) (not (clear ?x)) (not (handempty))))
)
"""

GRIPPER_DOMAIN = f"""
(define (domain gripper)
  (:predicates (room ?r) (ball ?b) (gripper ?g) (at-robby ?r) (at ?b ?r)
               (free ?g) (carry ?b ?g) {_COLOR_DECLS})
  (:static room ball gripper {_COLOR_LIST})
  (:action move :parameters (?from ?to)
    :precondition (and (room ?from) (room ?to) (at-robby ?from))
    :effect (and (at-robby ?to) (not (at-robby ?from))))
  (:action pick :parameters (?b ?r ?g)
    :precondition (and (ball ?b) (room ?r) (gripper ?g) (at ?b ?r) (at-robby ?r) (free ?g))
    :effect (and (carry ?b ?g) (not (at ?b ?r)) (not (free ?g))))
  (:action drop :parameters (?b ?r ?g)
    :precondition (and (ball ?b) (room ?r) (gripper ?g) (carry ?b ?g) (at-robby ?r))
    :effect (and (at ?b ?r) (free ?g) (not (carry ?b ?g))))
)
"""

GRIPPER_GRAPH_DOMAIN = f"""
(define (domain gripper-graph)
  (:predicates (room ?r) (ball ?b) (gripper ?g) (connected ?a ?b) (at-robby ?r)
               (at ?b ?r) (free ?g) (carry ?b ?g) {_COLOR_DECLS})
  (:static room ball gripper connected {_COLOR_LIST})
  (:action move :parameters (?from ?to)
    :precondition (and (connected ?from ?to) (at-robby ?from))
    :effect (and (at-robby ?to) (not (at-robby ?from))))
  (:action pick :parameters (?b ?r ?g)
    :precondition (and (ball ?b) (room ?r) (gripper ?g) (at ?b ?r) (at-robby ?r) (free ?g))
    :effect (and (carry ?b ?g) (not (at ?b ?r)) (not (free ?g))))
  (:action drop :parameters (?b ?r ?g)
    :precondition (and (ball ?b) (room ?r) (gripper ?g) (carry ?b ?g) (at-robby ?r))
    :effect (and (at ?b ?r) (free ?g) (not (carry ?b ?g))))
)
"""

DELIVERY_DOMAIN = f"""
(define (domain delivery)
  (:predicates (cell ?c) (package ?p) (truck ?t) (connected ?a ?b) (at ?x ?c)
               (carrying ?t ?p) (empty ?t) {_COLOR_DECLS})
  (:static cell package truck connected {_COLOR_LIST})
  (:action move :parameters (?t ?from ?to)
    :precondition (and (truck ?t) (connected ?from ?to) (at ?t ?from))
    :effect (and (at ?t ?to) (not (at ?t ?from))))
  (:action pick :parameters (?t ?p ?c)
    :precondition (and (truck ?t) (package ?p) (cell ?c) (at ?t ?c) (at ?p ?c) (empty ?t))
    :effect (and (carrying ?t ?p) (not (at ?p ?c)) (not (empty ?t))))
  (:action drop :parameters (?t ?p ?c)
    :precondition (and (truck ?t) (package ?p) (cell ?c) (at ?t ?c) (carrying ?t ?p))
    :effect (and (at ?p ?c) (empty ?t) (not (carrying ?t ?p))))
)
"""

VISITALL_DOMAIN = f"""
(define (domain visitall)
  (:predicates (connected ?a ?b) (at-robot ?c) (visited ?c) {_COLOR_DECLS})
  (:static connected {_COLOR_LIST})
  (:action move :parameters (?from ?to)
    :precondition (and (connected ?from ?to) (at-robot ?from))
    :effect (and (at-robot ?to) (visited ?to) (not (at-robot ?from))))
)
"""

DOMAIN_TEXTS = {
    "blocks": BLOCKS_DOMAIN,
    "blocks-c": BLOCKS_DOMAIN,
    "gripper": GRIPPER_DOMAIN,
    "gripper-graph": GRIPPER_GRAPH_DOMAIN,
    "delivery": DELIVERY_DOMAIN,
    "visitall": VISITALL_DOMAIN,
}

_DOMAIN_CACHE = {}


def builtin_domain(name: str):
    if name not in DOMAIN_TEXTS:
        raise GeneratorError(f"unknown domain {name!r} (choose from {sorted(DOMAIN_TEXTS)})")
    if name not in _DOMAIN_CACHE:
        _DOMAIN_CACHE[name] = strips.parse_domain(DOMAIN_TEXTS[name])
    return _DOMAIN_CACHE[name]


@dataclass(frozen=True)
class GeneratorConfig:
    domain: str = "blocks"
    objects: tuple = (3, 5)  # blocks / balls / grid cells, depending on domain
    colors: tuple = (1, 6)
    variables: tuple = (1, 2)
    neq: str = "none"  # or "all-pairs"
    rooms: tuple = (2, 3)  # gripper only
    packages: tuple = (1, 2)  # delivery only
    room_graph: str = "complete"  # gripper: "complete" or "random"
    max_retries: int = 50

    def validate(self):
        if self.domain not in DOMAIN_TEXTS:
            raise GeneratorError(f"unknown domain {self.domain!r}")
        if not 1 <= self.colors[0] <= self.colors[1] <= len(COLOR_NAMES):
            raise GeneratorError(f"color range {self.colors} outside 1..{len(COLOR_NAMES)}")
        if self.neq not in ("none", "all-pairs"):
            raise GeneratorError(f"neq mode must be 'none' or 'all-pairs', got {self.neq!r}")
        return self


def _rng_int(rng, lo, hi):
    return int(rng.integers(lo, hi + 1))


def _objects_with(problem: Problem, pred_name: str):
    pid = problem.domain.pred_id[pred_name]
    return sorted(a[1] for a in problem.statics if a[0] == pid)


def object_colors(problem: Problem):
    """Map object id -> sorted tuple of its color names."""
    out = {}
    for color in COLOR_NAMES:
        pid = problem.domain.pred_id[color]
        for a in problem.statics:
            if a[0] == pid:
                out.setdefault(a[1], []).append(color)
    return {o: tuple(sorted(cs)) for o, cs in out.items()}


def _pick_grid(rng, lo, hi):
    n = _rng_int(rng, max(lo, 2), hi)
    pairs = [(w, n // w) for w in range(1, n + 1) if n % w == 0 and w <= n // w]
    w, h = pairs[_rng_int(rng, 0, len(pairs) - 1)]
    return w, h


def _grid_statics(width, height, cell_name):
    atoms = []
    for x in range(width):
        for y in range(height):
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nx, ny = x + dx, y + dy
                if 0 <= nx < width and 0 <= ny < height:
                    atoms.append(f"(connected {cell_name(x, y)} {cell_name(nx, ny)})")
    return atoms


def _assemble(domain, name, objects, init_atoms):
    text = (
        f"(define (problem {name}) (:domain {domain.name})\n"
        f"  (:objects {' '.join(objects)})\n"
        f"  (:init {' '.join(init_atoms)})\n"
        f"  (:goal (and)))\n"
    )
    return strips.parse_problem(text, domain)


def _sample_colors(rng, m, available: Counter, need_distinct: bool, max_retries: int):
    """Pick one color per goal variable from those present in the instance.

    With an all-pairs inequality (or a template that forces distinct objects)
    the multiset of picked colors must fit the per-color object counts;
    otherwise the goal would be trivially unsatisfiable.
    """
    names = sorted(available)
    if not names:
        raise GeneratorError("instance has no colored objects")
    for _ in range(max_retries):
        seq = [names[_rng_int(rng, 0, len(names) - 1)] for _ in range(m)]
        if not need_distinct:
            return seq
        counts = Counter(seq)
        if all(counts[c] <= available[c] for c in counts):
            return seq
    raise GeneratorError(
        f"could not sample {m} colors with distinct carriers from {dict(available)}"
    )


def _color_counter(problem, object_ids):
    counts = Counter()
    colors = object_colors(problem)
    for o in object_ids:
        for c in colors.get(o, ()):
            counts[c] += 1
    return counts


def _all_pairs_neq(nvars):
    return tuple(
        (var_term(j), var_term(i)) for i in range(nvars) for j in range(i + 1, nvars)
    )


def _finish_goal(problem, config, rng, goal, partial):
    if partial and goal.variables:
        m = len(goal.variables)
        j = _rng_int(rng, 0, m)
        if j:
            chosen = sorted(int(v) for v in rng.choice(m, size=j, replace=False))
            binding = {v: _rng_int(rng, 0, problem.n_objects - 1) for v in chosen}
            goal = goals.ground(goal, binding)
    return goal


# ---------------------------------------------------------------------------
# Instance builders.


def _build_blocks(config, rng):
    domain = builtin_domain("blocks")
    n = _rng_int(rng, *config.objects)
    ncolors = min(_rng_int(rng, *config.colors), len(COLOR_NAMES))
    palette = COLOR_NAMES[:ncolors]
    names = [f"b{i}" for i in range(n)]
    init = ["(handempty)"]
    for b in names:
        init.append(f"({palette[_rng_int(rng, 0, ncolors - 1)]} {b})")
    order = [names[int(i)] for i in rng.permutation(n)]
    towers = [[order[0]]]
    for b in order[1:]:
        if rng.random() < 0.4:
            towers.append([b])
        else:
            towers[-1].append(b)
    for tower in towers:
        init.append(f"(ontable {tower[0]})")
        for lower, upper in zip(tower, tower[1:]):
            init.append(f"(on {upper} {lower})")
        init.append(f"(clear {tower[-1]})")
    return _assemble(domain, f"blocks-{n}", names, init)


def _build_gripper(config, rng):
    graph = config.room_graph == "random"
    domain = builtin_domain("gripper-graph" if graph else "gripper")
    nrooms = _rng_int(rng, *config.rooms)
    nballs = _rng_int(rng, *config.objects)
    ncolors = _rng_int(rng, *config.colors)
    palette = COLOR_NAMES[:ncolors]
    rooms = [f"r{i}" for i in range(nrooms)]
    balls = [f"ball{i}" for i in range(nballs)]
    grippers = ["g0", "g1"]
    init = [f"(room {r})" for r in rooms]
    init += [f"(ball {b})" for b in balls]
    init += [f"(gripper {g})" for g in grippers]
    init += [f"(free {g})" for g in grippers]
    init.append(f"(at-robby {rooms[_rng_int(rng, 0, nrooms - 1)]})")
    for b in balls:
        init.append(f"({palette[_rng_int(rng, 0, ncolors - 1)]} {b})")
        init.append(f"(at {b} {rooms[_rng_int(rng, 0, nrooms - 1)]})")
    if graph:
        # Random connected graph: a random spanning tree plus a few extras.
        order = [int(i) for i in rng.permutation(nrooms)]
        edges = set()
        for i in range(1, nrooms):
            a, b = order[i], order[_rng_int(rng, 0, i - 1)]
            edges.add((min(a, b), max(a, b)))
        for _ in range(nrooms // 2):
            a, b = _rng_int(rng, 0, nrooms - 1), _rng_int(rng, 0, nrooms - 1)
            if a != b:
                edges.add((min(a, b), max(a, b)))
        for a, b in sorted(edges):
            init.append(f"(connected {rooms[a]} {rooms[b]})")
            init.append(f"(connected {rooms[b]} {rooms[a]})")
    return _assemble(domain, f"gripper-{nballs}", rooms + balls + grippers, init)


def _build_delivery(config, rng):
    domain = builtin_domain("delivery")
    width, height = _pick_grid(rng, *config.objects)
    npkgs = _rng_int(rng, *config.packages)
    ncolors = _rng_int(rng, *config.colors)
    palette = COLOR_NAMES[:ncolors]
    cell = lambda x, y: f"c{x}-{y}"
    cells = [cell(x, y) for x in range(width) for y in range(height)]
    pkgs = [f"p{i}" for i in range(npkgs)]
    init = [f"(cell {c})" for c in cells]
    init += [f"(package {p})" for p in pkgs]
    init += ["(truck t0)", "(empty t0)"]
    init += _grid_statics(width, height, cell)
    for c in cells:
        init.append(f"({palette[_rng_int(rng, 0, ncolors - 1)]} {c})")
    init.append(f"(at t0 {cells[_rng_int(rng, 0, len(cells) - 1)]})")
    for p in pkgs:
        init.append(f"(at {p} {cells[_rng_int(rng, 0, len(cells) - 1)]})")
    return _assemble(domain, f"delivery-{width}x{height}", cells + pkgs + ["t0"], init)


def _build_visitall(config, rng):
    domain = builtin_domain("visitall")
    width, height = _pick_grid(rng, *config.objects)
    ncolors = _rng_int(rng, *config.colors)
    palette = COLOR_NAMES[:ncolors]
    cell = lambda x, y: f"c{x}-{y}"
    cells = [cell(x, y) for x in range(width) for y in range(height)]
    init = _grid_statics(width, height, cell)
    for c in cells:
        init.append(f"({palette[_rng_int(rng, 0, ncolors - 1)]} {c})")
    start = cells[_rng_int(rng, 0, len(cells) - 1)]
    init.append(f"(at-robot {start})")
    init.append(f"(visited {start})")
    return _assemble(domain, f"visitall-{width}x{height}", cells, init)


_BUILDERS = {
    "blocks": _build_blocks,
    "blocks-c": _build_blocks,
    "gripper": _build_gripper,
    "gripper-graph": _build_gripper,
    "delivery": _build_delivery,
    "visitall": _build_visitall,
}


# ---------------------------------------------------------------------------
# Goal templates.


def sample_goal(problem: Problem, config: GeneratorConfig, rng, partial=False) -> QuantifiedGoal:
    domain = problem.domain
    pid = domain.pred_id
    m = _rng_int(rng, *config.variables)
    all_pairs = config.neq == "all-pairs"

    if config.domain in ("blocks", "blocks-c"):
        blocks = list(range(problem.n_objects))
        # A chain forces distinct blocks even without neq; clear-goals only
        # need distinct carriers under the all-pairs constraint.
        chain = config.domain == "blocks"
        colors = _sample_colors(
            rng, m, _color_counter(problem, blocks), chain or all_pairs, config.max_retries
        )
        atoms = [(pid[colors[i]], var_term(i)) for i in range(m)]
        if chain:
            atoms += [(pid["on"], var_term(i), var_term(i + 1)) for i in range(m - 1)]
        else:
            atoms += [(pid["clear"], var_term(i)) for i in range(m)]
    elif config.domain in ("gripper", "gripper-graph"):
        balls = _objects_with(problem, "ball")
        rooms = _objects_with(problem, "room")
        colors = _sample_colors(
            rng, m, _color_counter(problem, balls), all_pairs, config.max_retries
        )
        atoms = []
        for i in range(m):
            room = rooms[_rng_int(rng, 0, len(rooms) - 1)]
            atoms.append((pid[colors[i]], var_term(i)))
            atoms.append((pid["at"], var_term(i), room))
    elif config.domain == "delivery":
        cells = _objects_with(problem, "cell")
        pkgs = _objects_with(problem, "package")
        truck = _objects_with(problem, "truck")[0]
        m = min(m, len(pkgs) + 1)
        colors = _sample_colors(
            rng, m, _color_counter(problem, cells), all_pairs, config.max_retries
        )
        chosen = [pkgs[int(i)] for i in rng.permutation(len(pkgs))]
        atoms = []
        for i in range(m):
            thing = truck if i >= len(pkgs) else chosen[i]
            atoms.append((pid["at"], thing, var_term(i)))
            atoms.append((pid[colors[i]], var_term(i)))
    elif config.domain == "visitall":
        cells = list(range(problem.n_objects))
        colors = _sample_colors(
            rng, m, _color_counter(problem, cells), all_pairs, config.max_retries
        )
        atoms = []
        for i in range(m):
            atoms.append((pid[colors[i]], var_term(i)))
            atoms.append((pid["visited"], var_term(i)))
    else:
        raise GeneratorError(f"no goal template for domain {config.domain!r}")

    variables = tuple(f"?x{i + 1}" for i in range(m))
    neq = _all_pairs_neq(m) if all_pairs else ()
    goal = QuantifiedGoal(variables, tuple(atoms), tuple(sorted(neq)))
    return _finish_goal(problem, config, rng, goal, partial)


def generate_instance(config: GeneratorConfig, seed: int) -> Problem:
    """Build a seeded instance: init plus one fully lifted template goal."""
    config.validate()
    rng = np.random.default_rng(int(seed))
    for attempt in range(config.max_retries):
        base = _BUILDERS[config.domain](config, rng)
        try:
            goal = sample_goal(base, config, rng)
        except GeneratorError:
            continue
        return Problem(base.domain, base.name, base.objects, base.init, goal, base.obj_id)
    raise GeneratorError(f"could not generate a satisfiable-looking {config.domain} instance")


# ---------------------------------------------------------------------------
# Closed-form reference values for the Visitall family.


def _adjacency(problem: Problem):
    pid = problem.domain.pred_id["connected"]
    adj = {}
    for a in sorted(problem.statics):
        if a[0] == pid:
            adj.setdefault(a[1], []).append(a[2])
    return adj


def _robot_cell(problem: Problem, state) -> int:
    pid = problem.domain.pred_id["at-robot"]
    for a in state:
        if a[0] == pid:
            return a[1]
    raise ValueError("state has no robot position")


def _bfs_distances(adj, source, n):
    dist = {source: 0}
    queue = [source]
    for cell in queue:
        for nxt in adj.get(cell, ()):
            if nxt not in dist:
                dist[nxt] = dist[cell] + 1
                queue.append(nxt)
    return dist


def visit1_value(problem: Problem, state, color: str):
    """Distance from the robot to the nearest cell of the color, or None.

    Visited atoms are ignored: grounding is meant to happen on initial
    states, where the visited set is just the robot's current cell.
    """
    cells = _objects_with(problem, color)
    robot = _robot_cell(problem, state)
    dist = _bfs_distances(_adjacency(problem), robot, problem.n_objects)
    best = None
    for c in cells:
        d = dist.get(c)
        if d is not None and (best is None or d < best):
            best = d
    return best


def visit_many_value(problem: Problem, state, colors):
    """Length of the shortest walk from the robot that visits the color
    multiset (inequality constraints excluded).

    Exact dynamic programming over (position, remaining multiset): reaching
    a cell consumes every pending copy of that cell's colors, because
    without inequality constraints repeated variables of one color may all
    bind to the same cell.  Legs between stops use BFS distances.
    """
    colors = tuple(sorted(colors))
    adj = _adjacency(problem)
    robot = _robot_cell(problem, state)
    cell_colors = object_colors(problem)
    relevant = sorted(
        {c for c, cs in cell_colors.items() if any(col in colors for col in cs)}
    )
    for col in set(colors):
        if not _objects_with(problem, col):
            return None
    dist_from = {p: _bfs_distances(adj, p, problem.n_objects) for p in [robot] + relevant}
    memo = {}

    def best_cost(pos, remaining):
        remaining = tuple(c for c in remaining if c not in cell_colors.get(pos, ()))
        if not remaining:
            return 0
        key = (pos, remaining)
        if key in memo:
            return memo[key]
        best = None
        for nxt in relevant:
            if nxt == pos or not any(col in remaining for col in cell_colors[nxt]):
                continue
            d = dist_from[pos].get(nxt)
            if d is None:
                continue
            rest = best_cost(nxt, remaining)
            if rest is not None and (best is None or d + rest < best):
                best = d + rest
        memo[key] = best
        return best

    return best_cost(robot, colors)
