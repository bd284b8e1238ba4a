import itertools

import numpy as np
import pytest

from qground import generators, oracle, strips
from qground.strips import (
    GOAL_MARKER,
    ParseError,
    apply_action,
    applicable,
    ground_actions,
    parse_domain,
    parse_problem,
    print_domain,
    print_problem,
    validate_plan,
)


def test_blocks_domain_markers_and_builtins(blocks_domain):
    declared = blocks_domain.declared()
    assert [p.name for p in declared[:5]] == ["on", "ontable", "clear", "holding", "handempty"]
    markers = [p for p in blocks_domain.predicates if p.kind == GOAL_MARKER]
    # one marker twin per declared predicate, plus one for neq
    assert len(markers) == len(declared) + 1
    for p in declared:
        marker = blocks_domain.predicates[blocks_domain.goal_marker[blocks_domain.pred(p.name)]]
        assert marker.name == p.name + "_g"
        assert marker.arity == p.arity
    for name, arity in [("constant", 1), ("variable", 1), ("possible-binding", 2), ("neq", 2)]:
        pid = blocks_domain.pred(name)
        assert blocks_domain.predicates[pid].kind == "builtin"
        assert blocks_domain.predicates[pid].arity == arity


def test_undeclared_predicate_in_action():
    text = """
    (define (domain broken)
      (:predicates (p ?x))
      (:action a :parameters (?x) :precondition (and (foo ?x)) :effect (and (p ?x))))
    """
    with pytest.raises(ParseError, match="undeclared predicate foo"):
        parse_domain(text)


def test_static_predicate_forbidden_in_effects():
    text = """
    (define (domain broken)
      (:predicates (p ?x) (s ?x))
      (:static s)
      (:action a :parameters (?x) :precondition (and (p ?x)) :effect (and (s ?x))))
    """
    with pytest.raises(ParseError, match="static predicate s"):
        parse_domain(text)


def test_visitall_move_schema(visitall_domain):
    move = visitall_domain.schemas[0]
    assert move.name == "move"
    names = {visitall_domain.predicates[a[0]].name for a in move.pre}
    assert names == {"connected", "at-robot"}
    # round-trip identity on the domain itself
    assert parse_domain(print_domain(visitall_domain)) == visitall_domain


def test_goal_with_marker_names(visitall_domain):
    text = """
    (define (problem p) (:domain visitall)
      (:objects a b)
      (:init (connected a b) (connected b a) (blue a) (blue b) (at-robot a) (visited a))
      (:goal (exists (?x) (and (blue_g ?x) (visited_g ?x)))))
    """
    problem = parse_problem(text, visitall_domain)
    goal = problem.goal
    assert len(goal.variables) == 1
    assert len(goal.atoms) == 2
    names = {visitall_domain.predicates[a[0]].name for a in goal.atoms}
    assert names == {"blue", "visited"}  # markers normalize to base predicates


def test_ground_goal_without_exists(visitall_domain):
    text = """
    (define (problem p) (:domain visitall)
      (:objects a) (:init (at-robot a) (blue a))
      (:goal (and (visited a))))
    """
    problem = parse_problem(text, visitall_domain)
    assert problem.goal.is_ground
    assert len(problem.goal.atoms) == 1


def test_blocks_chain_goal_shape(blocks_domain):
    # five variables, four on-atoms and five color atoms
    objs = " ".join("abcdefgh")
    text = f"""
    (define (problem tower) (:domain blocks)
      (:objects {objs})
      (:init (handempty) (ontable a) (clear a) (blue a) (red b) (ontable b) (clear b)
             (blue c) (ontable c) (clear c) (red d) (ontable d) (clear d)
             (red e) (ontable e) (clear e) (blue f) (ontable f) (clear f)
             (red g) (ontable g) (clear g) (blue h) (ontable h) (clear h))
      (:goal (exists (?x1 ?x2 ?x3 ?x4 ?x5)
        (and (blue ?x1) (red ?x2) (blue ?x3) (red ?x4) (red ?x5)
             (on ?x1 ?x2) (on ?x2 ?x3) (on ?x3 ?x4) (on ?x4 ?x5)))))
    """
    problem = parse_problem(text, blocks_domain)
    assert len(problem.goal.variables) == 5
    assert len(problem.goal.atoms) == 9


def test_parse_problem_errors(visitall_domain):
    with pytest.raises(ParseError, match="unknown object"):
        parse_problem(
            "(define (problem p) (:domain visitall) (:objects a)"
            " (:init (at-robot b)) (:goal (and)))",
            visitall_domain,
        )
    with pytest.raises(ParseError, match="shadows object"):
        parse_problem(
            "(define (problem p) (:domain visitall) (:objects a)"
            " (:init (at-robot a)) (:goal (exists (?a) (and (visited ?a)))))",
            visitall_domain,
        )


def test_syntax_error_reports_position():
    with pytest.raises(ParseError, match=r"line 2, column 4"):
        parse_domain("(define (domain d)\n  (:bad))")
    with pytest.raises(ParseError, match=r"line 1, column 1: unbalanced"):
        parse_domain("(define (domain d)")


def test_gripper_pick_grounding_count():
    config = generators.GeneratorConfig(
        domain="gripper", objects=(2, 2), rooms=(2, 2), colors=(2, 2)
    )
    problem = generators.generate_instance(config, seed=5)
    picks = [a for a in ground_actions(problem) if a.schema == "pick"]
    assert len(picks) == 2 * 2 * 2


def test_zero_parameter_schema_grounds_once():
    domain = parse_domain(
        """
        (define (domain d) (:predicates (p) (q))
          (:action flip :parameters () :precondition (and (p)) :effect (and (q) (not (p)))))
        """
    )
    problem = parse_problem(
        "(define (problem x) (:domain d) (:objects a b c) (:init (p)) (:goal (and (q))))",
        domain,
    )
    actions = ground_actions(problem)
    assert len(actions) == 1
    assert actions[0].name == "(flip)"


def test_visitall_2x2_move_count(visitall_2x2):
    moves = ground_actions(visitall_2x2)
    assert len(moves) == 8  # 4 cells x 2 neighbors each


def test_applicable_basics(visitall_2x2):
    actions = ground_actions(visitall_2x2)
    empty = frozenset()
    assert applicable(empty, actions) == []
    statics = visitall_2x2.statics
    apps = applicable(visitall_2x2.init, actions)
    assert len(apps) == 2  # robot in a corner
    for a in apps:
        assert a.pre <= visitall_2x2.init
    # an action with an empty precondition is always applicable
    domain = parse_domain(
        "(define (domain d) (:predicates (q)) (:action go :parameters () "
        ":precondition (and) :effect (and (q))))"
    )
    problem = strips.parse_problem(
        "(define (problem p) (:domain d) (:objects o) (:init) (:goal (and (q))))", domain
    )
    acts = ground_actions(problem)
    assert applicable(frozenset(), acts) == list(acts)


def test_apply_blocks_pickup(blocks_domain):
    text = """
    (define (problem two) (:domain blocks)
      (:objects a b)
      (:init (handempty) (ontable a) (clear a) (ontable b) (clear b) (blue a) (red b))
      (:goal (and (on a b))))
    """
    problem = parse_problem(text, blocks_domain)
    pickup_a = next(a for a in ground_actions(problem) if a.name == "(pickup a)")
    nxt = apply_action(problem.init, pickup_a)
    names = {strips.format_atom(blocks_domain, atom, problem.objects) for atom in nxt}
    assert "(holding a)" in names
    assert "(handempty)" not in names
    assert pickup_a.add <= nxt
    assert not (pickup_a.delete & nxt)
    with pytest.raises(strips.InapplicableActionError):
        apply_action(nxt, pickup_a)


def test_validate_plan_empty(visitall_2x2, visitall_domain):
    sat = parse_problem(
        """
        (define (problem p) (:domain visitall)
          (:objects a) (:init (at-robot a) (visited a) (red a))
          (:goal (exists (?x) (and (red ?x) (visited ?x)))))
        """,
        visitall_domain,
    )
    check = validate_plan(sat, [])
    assert check.valid and check.cost == 0
    check = validate_plan(visitall_2x2, [])
    assert not check.valid


@pytest.mark.parametrize("domain_name", sorted(generators.DOMAIN_TEXTS))
def test_roundtrip_generated_instances(domain_name):
    config = generators.GeneratorConfig(domain=domain_name, objects=(3, 5), colors=(1, 3))
    for seed in range(4):
        problem = generators.generate_instance(config, seed=seed)
        text = print_problem(problem)
        again = parse_problem(text, problem.domain)
        assert again == problem
        assert print_problem(again) == text


def test_apply_soundness_on_random_walks():
    rng = np.random.default_rng(0)
    for seed in range(5):
        config = generators.GeneratorConfig(domain="blocks", objects=(4, 5), colors=(2, 3))
        problem = generators.generate_instance(config, seed=seed)
        actions = ground_actions(problem)
        state = problem.init
        for _ in range(30):
            apps = applicable(state, actions)
            if not apps:
                break
            action = apps[int(rng.integers(len(apps)))]
            nxt = apply_action(state, action)
            assert action.add <= nxt
            assert (action.delete & nxt) <= action.add
            state = nxt


def test_ground_count_bound_and_static_pruning_soundness():
    config = generators.GeneratorConfig(
        domain="gripper", objects=(2, 2), rooms=(2, 2), colors=(1, 1)
    )
    problem = generators.generate_instance(config, seed=3)
    n = problem.n_objects
    pruned = ground_actions(problem)
    for schema in problem.domain.schemas:
        count = sum(1 for a in pruned if a.schema == schema.name)
        assert count <= n ** len(schema.params)
    # exhaustive check: instantiations removed by static pruning are
    # inapplicable in every reachable state
    kept = {(a.schema, a.args) for a in pruned}
    space = oracle.explore(problem, cap=10_000)
    assert not space.truncated
    for schema in problem.domain.schemas:
        for args in itertools.product(range(n), repeat=len(schema.params)):
            if (schema.name, args) in kept:
                continue
            pre = frozenset(strips._subst(a, args) for a in schema.pre)
            assert all(not pre <= s for s in space.states)


def test_grounding_deterministic():
    config = generators.GeneratorConfig(domain="delivery", objects=(4, 6))
    problem = generators.generate_instance(config, seed=9)
    assert ground_actions(problem) == ground_actions(problem)
