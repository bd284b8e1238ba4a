"""Semantics of existentially quantified goals.

A state satisfies a quantified goal iff some substitution of its variables
by objects makes every goal atom true in the state and maps every ``neq``
pair to distinct constants.  Satisfaction runs a complete backtracking
search with most-constrained-variable ordering, candidate sets seeded from
the state's atoms, and forward checking for ``neq``.

``compile_dnf`` eliminates the quantifier the classical way: one dummy
action per statically valid total binding, each achieving a fresh nullary
goal atom, so any optimal plan for the compiled problem costs exactly one
more step than the optimal cost of the quantified goal.
"""

from __future__ import annotations

from dataclasses import dataclass

from .strips import (
    STATIC,
    ActionSchema,
    Domain,
    ParseError,
    Predicate,
    Problem,
    QuantifiedGoal,
    is_var,
    var_index,
    var_term,
)

DNF_GOAL_PRED = "dnf-goal-reached"


class BindingLimitExceeded(RuntimeError):
    pass


def _atom_vars(atom):
    return [var_index(t) for t in atom[1:] if is_var(t)]


def _match(atom, fact, assignment):
    """Bindings forced by matching a lifted atom against a ground fact,
    or None if incompatible with the current partial assignment."""
    forced = {}
    for t, c in zip(atom[1:], fact[1:]):
        if is_var(t):
            v = var_index(t)
            bound = assignment.get(v, forced.get(v))
            if bound is None:
                forced[v] = c
            elif bound != c:
                return None
        elif t != c:
            return None
    return forced


def satisfies(state: frozenset, goal: QuantifiedGoal, n_objects: int):
    """Return a total binding (dict var index -> object id) if the state
    satisfies the goal, else None.  Ground goals yield the empty binding."""
    by_pred = {}
    for fact in state:
        by_pred.setdefault(fact[0], []).append(fact)
    lifted = []
    for atom in goal.atoms:
        if any(is_var(t) for t in atom[1:]):
            lifted.append(atom)
        elif atom not in state:
            return None
    neq_vv, neq_vc = [], []
    for a, b in goal.neq:
        if not is_var(a) and not is_var(b):
            if a == b:
                return None
        elif is_var(a) and is_var(b):
            if a == b:
                return None  # neq(?x ?x) can never hold
            neq_vv.append((var_index(a), var_index(b)))
        else:
            # Sorted pairs put the (negative) variable term first.
            neq_vc.append((var_index(a), b))
    nvars = len(goal.variables)
    if nvars == 0:
        return {}

    def domains_for(assignment):
        domains = {v: None for v in range(nvars) if v not in assignment}
        if not domains:
            return domains
        for atom in lifted:
            per_var = {}
            for fact in by_pred.get(atom[0], ()):
                forced = _match(atom, fact, assignment)
                if forced is None:
                    continue
                for v, c in forced.items():
                    per_var.setdefault(v, set()).add(c)
            for v in _atom_vars(atom):
                if v in assignment:
                    continue
                cand = per_var.get(v, set())
                domains[v] = cand if domains[v] is None else domains[v] & cand
                if not domains[v]:
                    return None
        for v, dom in domains.items():
            if dom is None:
                domains[v] = set(range(n_objects))
        for v, const in neq_vc:
            if v in domains:
                domains[v].discard(const)
                if not domains[v]:
                    return None
        for u, w in neq_vv:
            for v, other in ((u, w), (w, u)):
                if v in domains and other in assignment:
                    domains[v].discard(assignment[other])
                    if not domains[v]:
                        return None
        return domains

    def search(assignment):
        if len(assignment) == nvars:
            for atom in lifted:
                ground = (atom[0],) + tuple(
                    assignment[var_index(t)] if is_var(t) else t for t in atom[1:]
                )
                if ground not in state:
                    return None
            return dict(assignment)
        domains = domains_for(assignment)
        if domains is None:
            return None
        var = min(domains, key=lambda v: (len(domains[v]), v))
        for value in sorted(domains[var]):
            assignment[var] = value
            result = search(assignment)
            if result is not None:
                return result
            del assignment[var]
        return None

    return search({})


def ground(goal: QuantifiedGoal, binding: dict) -> QuantifiedGoal:
    """Substitute bound variables; the rest are renumbered in order.

    ``neq`` pairs between two constants are kept and fail at satisfaction
    time, so an invalid binding yields a well-formed unsatisfiable goal.
    """
    nvars = len(goal.variables)
    for v in binding:
        if not 0 <= v < nvars:
            raise ValueError(f"binding refers to undeclared variable index {v}")
    remaining = [v for v in range(nvars) if v not in binding]
    new_index = {v: i for i, v in enumerate(remaining)}

    def subst(term):
        if not is_var(term):
            return term
        v = var_index(term)
        if v in binding:
            return binding[v]
        return var_term(new_index[v])

    atoms = tuple((a[0],) + tuple(subst(t) for t in a[1:]) for a in goal.atoms)
    neq = set()
    for a, b in goal.neq:
        a, b = subst(a), subst(b)
        neq.add((a, b) if a <= b else (b, a))
    return QuantifiedGoal(
        tuple(goal.variables[v] for v in remaining), atoms, tuple(sorted(neq))
    )


def enumerate_valid_bindings(
    problem: Problem,
    goal: QuantifiedGoal,
    state: frozenset | None = None,
    cap: int = 10**6,
):
    """Yield total bindings whose static goal atoms hold in the state's
    static atoms and whose neq pairs are satisfied.

    The stream is lexicographic in (variable order, object order) and is
    produced by depth-first search, so nothing is materialized; more than
    ``cap`` bindings raises BindingLimitExceeded.
    """
    domain = problem.domain
    statics = problem.statics if state is None else frozenset(
        a for a in state if domain.kind(a[0]) == STATIC
    )
    static_atoms = [a for a in goal.atoms if domain.kind(a[0]) == STATIC]
    for atom in static_atoms:
        if not any(is_var(t) for t in atom[1:]) and atom not in statics:
            return
    for a, b in goal.neq:
        if not is_var(a) and not is_var(b) and a == b:
            return
        if is_var(a) and is_var(b) and a == b:
            return
    nvars = len(goal.variables)
    by_depth = [[] for _ in range(nvars + 1)]
    for atom in static_atoms:
        depth = max((v + 1 for v in _atom_vars(atom)), default=0)
        by_depth[depth].append(atom)
    neq_by_depth = [[] for _ in range(nvars + 1)]
    for a, b in goal.neq:
        depth = max(
            (var_index(t) + 1 for t in (a, b) if is_var(t)), default=0
        )
        neq_by_depth[depth].append((a, b))

    assignment = [0] * nvars
    yielded = 0

    def value(term):
        return assignment[var_index(term)] if is_var(term) else term

    def rec(depth):
        nonlocal yielded
        if depth == nvars:
            yielded += 1
            if yielded > cap:
                raise BindingLimitExceeded(f"more than {cap} valid bindings")
            yield {v: assignment[v] for v in range(nvars)}
            return
        for obj in range(problem.n_objects):
            assignment[depth] = obj
            ok = all(
                (a[0],) + tuple(value(t) for t in a[1:]) in statics
                for a in by_depth[depth + 1]
            ) and all(value(a) != value(b) for a, b in neq_by_depth[depth + 1])
            if ok:
                yield from rec(depth + 1)

    yield from rec(0)


@dataclass
class DnfCompilation:
    problem: Problem
    n_bindings: int
    solvable_hint: bool  # False iff there were zero valid bindings


def compile_dnf(problem: Problem, cap: int = 10**6) -> DnfCompilation:
    """Compile the quantified goal away.

    The compiled problem keeps the original actions and objects, adds a
    fresh nullary fluent as the only goal atom, and one zero-parameter
    ``bind-<k>`` action per valid binding whose precondition is that
    binding's fully ground goal atoms.
    """
    domain = problem.domain
    predicates = list(domain.predicates)
    pred_id = dict(domain.pred_id)
    goal_marker = dict(domain.goal_marker)
    marker_base = dict(domain.marker_base)
    for name, kind in ((DNF_GOAL_PRED, "fluent"), (DNF_GOAL_PRED + "_g", "goal-marker")):
        if name in pred_id:
            raise ParseError(f"predicate {name} already defined; cannot compile")
        pred_id[name] = len(predicates)
        predicates.append(Predicate(name, 0, kind))
    new_id = pred_id[DNF_GOAL_PRED]
    goal_marker[new_id] = pred_id[DNF_GOAL_PRED + "_g"]
    marker_base[pred_id[DNF_GOAL_PRED + "_g"]] = new_id

    schemas = list(domain.schemas)
    goal_atom = (new_id,)
    n_bindings = 0
    for k, binding in enumerate(
        enumerate_valid_bindings(problem, problem.goal, cap=cap)
    ):
        bound = ground(problem.goal, binding)
        note = " ".join(
            f"{problem.goal.variables[v]}={problem.objects[binding[v]]}"
            for v in sorted(binding)
        )
        schemas.append(
            ActionSchema(
                name=f"bind-{k}",
                params=(),
                pre=tuple(sorted(set(bound.atoms))),
                add=(goal_atom,),
                delete=(),
                comment=f"bind-{k}: {note}" if note else f"bind-{k}: (ground goal)",
            )
        )
        n_bindings += 1

    # Dummy actions mention concrete objects, so the compiled domain carries
    # every object as a domain-level constant.
    new_domain = Domain(
        domain.name + "-dnf",
        tuple(predicates),
        tuple(schemas),
        pred_id,
        goal_marker,
        marker_base,
        constants=problem.objects,
    )
    new_problem = Problem(
        new_domain,
        problem.name + "-dnf",
        problem.objects,
        problem.init,
        QuantifiedGoal((), (goal_atom,), ()),
        problem.obj_id,
    )
    return DnfCompilation(new_problem, n_bindings, n_bindings > 0)
