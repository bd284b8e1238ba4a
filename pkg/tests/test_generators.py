import numpy as np
import pytest

from qground import oracle, strips
from qground.generators import (
    COLOR_NAMES,
    GeneratorConfig,
    GeneratorError,
    generate_instance,
    visit1_value,
    visit_many_value,
)


def test_config_validation():
    with pytest.raises(GeneratorError):
        GeneratorConfig(domain="nope").validate()
    with pytest.raises(GeneratorError):
        GeneratorConfig(colors=(0, 2)).validate()
    with pytest.raises(GeneratorError):
        GeneratorConfig(colors=(1, 7)).validate()
    with pytest.raises(GeneratorError):
        GeneratorConfig(neq="some").validate()


def test_blocks_fig1_shaped_goal():
    config = GeneratorConfig(domain="blocks", objects=(8, 8), colors=(2, 2),
                             variables=(5, 5))
    problem = generate_instance(config, seed=1)
    goal = problem.goal
    assert len(goal.variables) == 5
    names = [problem.domain.predicates[a[0]].name for a in goal.atoms]
    assert names.count("on") == 4
    assert sum(1 for n in names if n in COLOR_NAMES) == 5
    # chain structure: on(x1,x2), on(x2,x3), ...
    ons = [a for a in goal.atoms if problem.domain.predicates[a[0]].name == "on"]
    for i, atom in enumerate(ons):
        assert atom[1] == strips.var_term(i) and atom[2] == strips.var_term(i + 1)


def test_blocks_c_goal_shape():
    config = GeneratorConfig(domain="blocks-c", objects=(5, 5), colors=(2, 2),
                             variables=(2, 2), neq="all-pairs")
    problem = generate_instance(config, seed=2)
    names = [problem.domain.predicates[a[0]].name for a in problem.goal.atoms]
    assert names.count("clear") == 2
    assert len(problem.goal.neq) == 1


def test_gripper_goal_targets_rooms():
    config = GeneratorConfig(domain="gripper", objects=(3, 3), rooms=(2, 3),
                             colors=(2, 3), variables=(2, 2), neq="all-pairs")
    problem = generate_instance(config, seed=3)
    domain = problem.domain
    rooms = {a[1] for a in problem.statics if a[0] == domain.pred("room")}
    at_atoms = [a for a in problem.goal.atoms if domain.predicates[a[0]].name == "at"]
    assert at_atoms
    for atom in at_atoms:
        assert strips.is_var(atom[1])
        assert atom[2] in rooms  # destination rooms are constants


def test_delivery_goal_mentions_packages_and_truck():
    config = GeneratorConfig(domain="delivery", objects=(4, 4), packages=(1, 1),
                             colors=(2, 2), variables=(2, 2))
    problem = generate_instance(config, seed=4)
    domain = problem.domain
    at_atoms = [a for a in problem.goal.atoms if domain.predicates[a[0]].name == "at"]
    things = {a[1] for a in at_atoms}
    truck = {a[1] for a in problem.statics if a[0] == domain.pred("truck")}
    pkgs = {a[1] for a in problem.statics if a[0] == domain.pred("package")}
    assert things <= truck | pkgs
    assert things & pkgs
    assert things & truck  # 2 variables but only 1 package: truck var appended


def test_visitall_single_color_single_var_is_visit1():
    config = GeneratorConfig(domain="visitall", objects=(6, 9), colors=(1, 1),
                             variables=(1, 1))
    problem = generate_instance(config, seed=5)
    goal = problem.goal
    assert len(goal.variables) == 1
    names = sorted(problem.domain.predicates[a[0]].name for a in goal.atoms)
    assert names == ["blue", "visited"]


def test_generation_reproducible():
    config = GeneratorConfig(domain="delivery", objects=(4, 6), colors=(1, 3))
    a = strips.print_problem(generate_instance(config, seed=9))
    b = strips.print_problem(generate_instance(config, seed=9))
    assert a == b
    c = strips.print_problem(generate_instance(config, seed=10))
    assert a != c


def test_generated_goals_mostly_satisfiable():
    satisfiable = total = 0
    for domain_name in ["blocks", "blocks-c", "gripper", "visitall"]:
        for seed in range(12):
            config = GeneratorConfig(
                domain=domain_name, objects=(3, 4), colors=(1, 2), variables=(1, 2),
                rooms=(2, 2), neq="all-pairs" if seed % 2 else "none",
            )
            problem = generate_instance(config, seed=seed)
            res = oracle.bfs_cost_from_state(problem, problem.init, problem.goal,
                                             cap=100_000)
            assert res.exact
            total += 1
            satisfiable += res.value is not None
    assert satisfiable / total >= 0.95


def test_room_graph_variant_connected():
    config = GeneratorConfig(domain="gripper-graph", objects=(2, 3), rooms=(3, 4),
                             room_graph="random")
    problem = generate_instance(config, seed=6)
    domain = problem.domain
    conn = [a for a in problem.statics if a[0] == domain.pred("connected")]
    assert conn
    res = oracle.bfs_cost_from_state(problem, problem.init, problem.goal, cap=100_000)
    assert res.exact and res.value is not None  # spanning tree keeps it solvable


# ---------------------------------------------------------------------------
# Closed-form Visitall values vs the BFS oracle.


def _visitall_problem(seed, size=(4, 9), colors=(1, 3)):
    config = GeneratorConfig(domain="visitall", objects=size, colors=colors)
    return generate_instance(config, seed=seed)


def test_visit1_robot_already_on_color():
    problem = _visitall_problem(7)
    domain = problem.domain
    robot = next(a[1] for a in problem.init if a[0] == domain.pred("at-robot"))
    color = next(c for c in COLOR_NAMES
                 if (domain.pred(c), robot) in problem.statics)
    assert visit1_value(problem, problem.init, color) == 0


def test_visit1_missing_color_dead():
    problem = _visitall_problem(8, colors=(1, 1))  # only blue cells
    assert visit1_value(problem, problem.init, "orange") is None


def test_visit1_requires_robot():
    problem = _visitall_problem(9)
    domain = problem.domain
    stripped = frozenset(a for a in problem.init if a[0] != domain.pred("at-robot"))
    with pytest.raises(ValueError, match="robot"):
        visit1_value(problem, stripped, "blue")


def _quantified_visit_goal(problem, colors):
    domain = problem.domain
    atoms = []
    for i, c in enumerate(colors):
        atoms.append((domain.pred(c), strips.var_term(i)))
        atoms.append((domain.pred("visited"), strips.var_term(i)))
    return strips.QuantifiedGoal(tuple(f"?x{i}" for i in range(len(colors))), tuple(atoms))


def test_visit1_matches_bfs_oracle():
    rng = np.random.default_rng(0)
    for seed in range(15):
        problem = _visitall_problem(seed, size=(4, 12), colors=(1, 3))
        color = COLOR_NAMES[int(rng.integers(4))]  # sometimes absent: dead end
        goal = _quantified_visit_goal(problem, [color])
        closed = visit1_value(problem, problem.init, color)
        bfs = oracle.bfs_cost_from_state(problem, problem.init, goal, cap=300_000)
        assert bfs.exact
        assert closed == bfs.value


def test_visit_many_reduces_to_visit1():
    for seed in range(6):
        problem = _visitall_problem(seed)
        for color in ("blue", "red"):
            assert visit_many_value(problem, problem.init, [color]) == visit1_value(
                problem, problem.init, color
            )


def test_visit_many_matches_bfs_oracle():
    rng = np.random.default_rng(1)
    for seed in range(10):
        problem = _visitall_problem(seed, size=(4, 9), colors=(2, 3))
        k = int(rng.integers(1, 4))
        colors = [COLOR_NAMES[int(rng.integers(3))] for _ in range(k)]
        goal = _quantified_visit_goal(problem, colors)
        closed = visit_many_value(problem, problem.init, colors)
        bfs = oracle.bfs_cost_from_state(problem, problem.init, goal, cap=500_000)
        assert bfs.exact
        assert closed == bfs.value
