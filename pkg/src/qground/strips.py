"""STRIPS core: domains, problems, states, parsing, grounding and successors.

The textual format is an s-expression dialect.  A domain file declares
predicates, an optional list of static predicates, and positive-STRIPS action
schemas; a problem file declares objects, an initial state, and a goal that
may open with an ``exists`` block introducing goal variables and ``neq``
constraints.  ``;`` starts a line comment.

Everything is interned.  Objects get dense non-negative ids per problem;
schema parameters and goal variables are encoded as negative ints
(``var k`` <-> ``-1 - k``).  A ground atom is a tuple
``(pred_id, term, ..., term)`` and a state is a frozenset of ground atoms,
so equality and hashing are order-independent; the canonical total order is
plain tuple sort.  All iteration orders below are fixed (declaration order,
ascending object ids), never hash order.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field

# Predicate kinds.
FLUENT = "fluent"
STATIC = "static"
GOAL_MARKER = "goal-marker"
BUILTIN = "builtin"

# Builtins exist in every domain; they never appear in files.
BUILTIN_NAMES = ("constant", "variable", "possible-binding", "neq")
MARKER_SUFFIX = "_g"

# A ground atom is (pred_id, t1, ..., tn); a state is a frozenset of them.
Atom = tuple
State = frozenset


def var_term(index: int) -> int:
    return -1 - index


def is_var(term: int) -> bool:
    return term < 0


def var_index(term: int) -> int:
    return -1 - term


class ParseError(ValueError):
    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = f"line {line}, column {col}: {message}"
        super().__init__(message)
        self.line = line
        self.col = col


class InapplicableActionError(ValueError):
    pass


@dataclass(frozen=True)
class Predicate:
    name: str
    arity: int
    kind: str


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[str, ...]
    pre: tuple[Atom, ...]
    add: tuple[Atom, ...]
    delete: tuple[Atom, ...]
    comment: str | None = None


@dataclass(frozen=True)
class GroundAction:
    name: str
    schema: str
    args: tuple[int, ...]
    pre: frozenset
    add: frozenset
    delete: frozenset


@dataclass(frozen=True)
class QuantifiedGoal:
    """A conjunctive goal whose atoms may contain existential variables.

    Atoms are stored over their *base* predicates (markers are an encoding
    concern, not a satisfaction one).  ``neq`` holds unordered term pairs,
    each stored sorted; a pair of equal constants is representable and makes
    the goal unsatisfiable.
    """

    variables: tuple[str, ...]
    atoms: tuple[Atom, ...]
    neq: tuple[tuple[int, int], ...] = ()

    @property
    def is_ground(self) -> bool:
        return not self.variables


@dataclass
class Domain:
    name: str
    predicates: tuple[Predicate, ...]
    schemas: tuple[ActionSchema, ...]
    pred_id: dict = field(repr=False)
    goal_marker: dict = field(repr=False)  # base pred id -> marker pred id
    marker_base: dict = field(repr=False)
    # Domain-level object names (used by DNF compilations, whose dummy
    # actions mention concrete objects).  A problem implicitly includes them
    # as its first objects, in order.
    constants: tuple = ()

    def pred(self, name: str) -> int:
        try:
            return self.pred_id[name]
        except KeyError:
            raise ParseError(f"undeclared predicate {name}") from None

    def kind(self, pred_id: int) -> str:
        return self.predicates[pred_id].kind

    def declared(self):
        """Predicates that appear in files (no markers, no builtins)."""
        return [p for p in self.predicates if p.kind in (FLUENT, STATIC)]

    def __eq__(self, other):
        return (
            isinstance(other, Domain)
            and self.name == other.name
            and self.predicates == other.predicates
            and self.schemas == other.schemas
            and self.constants == other.constants
        )


@dataclass
class Problem:
    domain: Domain
    name: str
    objects: tuple[str, ...]
    init: frozenset
    goal: QuantifiedGoal
    obj_id: dict = field(repr=False)

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def statics(self) -> frozenset:
        preds = self.domain.predicates
        return frozenset(a for a in self.init if preds[a[0]].kind == STATIC)

    def __eq__(self, other):
        return (
            isinstance(other, Problem)
            and self.name == other.name
            and self.domain == other.domain
            and self.objects == other.objects
            and self.init == other.init
            and self.goal == other.goal
        )


# ---------------------------------------------------------------------------
# Reader: tokens -> nested lists of Sym leaves (with positions for errors).

Sym = namedtuple("Sym", "text line col")


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            col += 1
            i += 1
            continue
        if ch in "()":
            tokens.append(Sym(ch, line, col))
            col += 1
            i += 1
            continue
        j = i
        while j < n and text[j] not in " \t\r\n();":
            j += 1
        tokens.append(Sym(text[i:j], line, col))
        col += j - i
        i = j
    return tokens


def _read_forms(text):
    tokens = _tokenize(text)
    pos = 0

    def read():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok.text == "(":
            items = []
            while True:
                if pos >= len(tokens):
                    raise ParseError("unbalanced '('", tok.line, tok.col)
                if tokens[pos].text == ")":
                    pos += 1
                    return items
                items.append(read())
        if tok.text == ")":
            raise ParseError("unexpected ')'", tok.line, tok.col)
        return tok

    forms = []
    while pos < len(tokens):
        forms.append(read())
    return forms


def _head(form):
    if isinstance(form, list) and form and isinstance(form[0], Sym):
        return form[0].text.lower()
    return None


def _sym(form, what):
    if not isinstance(form, Sym):
        pos = form[0] if isinstance(form, list) and form else None
        raise ParseError(
            f"expected {what}", getattr(pos, "line", None), getattr(pos, "col", None)
        )
    return form


# ---------------------------------------------------------------------------
# Domain parsing.


def parse_domain(text: str) -> Domain:
    forms = _read_forms(text)
    if len(forms) != 1:
        raise ParseError("expected a single (define (domain ...)) form")
    return _parse_domain_form(forms[0])


def _parse_domain_form(form) -> Domain:
    if _head(form) != "define" or _head(form[1]) != "domain":
        raise ParseError("expected (define (domain NAME) ...)")
    name = _sym(form[1][1], "domain name").text

    declared = []  # (name, arity, Sym)
    static_names = []
    constants = []
    action_forms = []
    for section in form[2:]:
        head = _head(section)
        if head == ":predicates":
            for entry in section[1:]:
                if not isinstance(entry, list) or not entry:
                    raise ParseError("malformed predicate declaration")
                psym = _sym(entry[0], "predicate name")
                declared.append((psym.text, len(entry) - 1, psym))
        elif head == ":static":
            static_names = [_sym(s, "predicate name").text for s in section[1:]]
        elif head == ":constants":
            for c in section[1:]:
                csym = _sym(c, "constant name")
                if csym.text.startswith("?") or csym.text in constants:
                    raise ParseError(f"bad constant {csym.text}", csym.line, csym.col)
                constants.append(csym.text)
        elif head == ":action":
            action_forms.append(section)
        else:
            pos = section[0] if isinstance(section, list) and section else None
            raise ParseError(
                f"unknown domain section {head!r}",
                getattr(pos, "line", None),
                getattr(pos, "col", None),
            )

    seen = set()
    for pname, _, psym in declared:
        if pname in seen:
            raise ParseError(f"duplicate predicate {pname}", psym.line, psym.col)
        if pname in BUILTIN_NAMES:
            raise ParseError(f"predicate name {pname} is reserved", psym.line, psym.col)
        if pname.endswith(MARKER_SUFFIX):
            raise ParseError(
                f"predicate name {pname} uses the reserved suffix {MARKER_SUFFIX}",
                psym.line,
                psym.col,
            )
        seen.add(pname)
    for sname in static_names:
        if sname not in seen:
            raise ParseError(f"undeclared predicate {sname} in :static")

    predicates = []
    pred_id = {}
    for pname, arity, _ in declared:
        kind = STATIC if pname in static_names else FLUENT
        pred_id[pname] = len(predicates)
        predicates.append(Predicate(pname, arity, kind))
    # Goal-marker twins for everything that can appear in a goal, then the
    # builtins used by the network encoding.
    goal_marker = {}
    marker_base = {}
    for pname, arity, _ in declared:
        base = pred_id[pname]
        marker = len(predicates)
        pred_id[pname + MARKER_SUFFIX] = marker
        predicates.append(Predicate(pname + MARKER_SUFFIX, arity, GOAL_MARKER))
        goal_marker[base] = marker
        marker_base[marker] = base
    for bname, arity in (("constant", 1), ("variable", 1), ("possible-binding", 2), ("neq", 2)):
        pred_id[bname] = len(predicates)
        predicates.append(Predicate(bname, arity, BUILTIN))
    neq_id = pred_id["neq"]
    pred_id["neq" + MARKER_SUFFIX] = len(predicates)
    predicates.append(Predicate("neq" + MARKER_SUFFIX, 2, GOAL_MARKER))
    goal_marker[neq_id] = pred_id["neq" + MARKER_SUFFIX]
    marker_base[pred_id["neq" + MARKER_SUFFIX]] = neq_id

    domain = Domain(
        name, tuple(predicates), (), pred_id, goal_marker, marker_base, tuple(constants)
    )
    schemas = tuple(_parse_action(domain, f) for f in action_forms)
    names = [s.name for s in schemas]
    if len(names) != len(set(names)):
        raise ParseError("duplicate action name")
    domain.schemas = schemas
    return domain


def _parse_action(domain, form) -> ActionSchema:
    if len(form) < 2:
        raise ParseError("malformed :action")
    name = _sym(form[1], "action name").text
    sections = {}
    i = 2
    while i < len(form):
        key = _sym(form[i], "action keyword").text.lower()
        if i + 1 >= len(form):
            raise ParseError(f"missing value for {key} in action {name}")
        sections[key] = form[i + 1]
        i += 2
    params_form = sections.get(":parameters", [])
    params = []
    for p in params_form:
        psym = _sym(p, "parameter")
        if not psym.text.startswith("?"):
            raise ParseError(f"parameter {psym.text} must start with '?'", psym.line, psym.col)
        if psym.text in params:
            raise ParseError(f"duplicate parameter {psym.text}", psym.line, psym.col)
        params.append(psym.text)
    param_idx = {p: k for k, p in enumerate(params)}

    def parse_atom(form, where):
        if not isinstance(form, list) or not form:
            raise ParseError(f"malformed atom in {where} of action {name}")
        psym = _sym(form[0], "predicate name")
        if psym.text not in domain.pred_id or domain.kind(domain.pred_id[psym.text]) not in (
            FLUENT,
            STATIC,
        ):
            raise ParseError(f"undeclared predicate {psym.text}", psym.line, psym.col)
        pid = domain.pred_id[psym.text]
        if domain.predicates[pid].arity != len(form) - 1:
            raise ParseError(
                f"arity mismatch for {psym.text}: expected "
                f"{domain.predicates[pid].arity}, got {len(form) - 1}",
                psym.line,
                psym.col,
            )
        terms = []
        const_idx = {c: i for i, c in enumerate(domain.constants)}
        for t in form[1:]:
            tsym = _sym(t, "term")
            if not tsym.text.startswith("?"):
                if tsym.text not in const_idx:
                    raise ParseError(
                        f"constant {tsym.text} not declared in :constants",
                        tsym.line,
                        tsym.col,
                    )
                terms.append(const_idx[tsym.text])
                continue
            if tsym.text not in param_idx:
                raise ParseError(
                    f"variable {tsym.text} is not a parameter of {name}", tsym.line, tsym.col
                )
            terms.append(var_term(param_idx[tsym.text]))
        return (pid,) + tuple(terms)

    def conjuncts(form):
        if form == []:
            return []
        if _head(form) == "and":
            return form[1:]
        return [form]

    pre = tuple(parse_atom(f, "precondition") for f in conjuncts(sections.get(":precondition", [])))
    add, delete = [], []
    for f in conjuncts(sections.get(":effect", [])):
        if _head(f) == "not":
            atom = parse_atom(f[1], "effect")
            delete.append(atom)
        else:
            atom = parse_atom(f, "effect")
            add.append(atom)
    for atom in add + delete:
        if domain.kind(atom[0]) == STATIC:
            raise ParseError(
                f"static predicate {domain.predicates[atom[0]].name} "
                f"may not appear in effects of {name}"
            )
    return ActionSchema(name, tuple(params), pre, tuple(add), tuple(delete))


# ---------------------------------------------------------------------------
# Problem parsing.


def parse_problem(text: str, domain: Domain) -> Problem:
    forms = _read_forms(text)
    if len(forms) != 1:
        raise ParseError("expected a single (define (problem ...)) form")
    return _parse_problem_form(forms[0], domain)


def _parse_problem_form(form, domain: Domain) -> Problem:
    if _head(form) != "define" or _head(form[1]) != "problem":
        raise ParseError("expected (define (problem NAME) ...)")
    name = _sym(form[1][1], "problem name").text

    objects = list(domain.constants)
    init_forms = []
    goal_form = None
    for section in form[2:]:
        head = _head(section)
        if head == ":domain":
            dname = _sym(section[1], "domain name").text
            if dname != domain.name:
                raise ParseError(f"problem declares domain {dname}, expected {domain.name}")
        elif head == ":objects":
            for o in section[1:]:
                osym = _sym(o, "object name")
                if osym.text.startswith("?"):
                    raise ParseError(f"object {osym.text} may not start with '?'", osym.line, osym.col)
                if osym.text in objects:
                    raise ParseError(f"duplicate object {osym.text}", osym.line, osym.col)
                objects.append(osym.text)
        elif head == ":init":
            init_forms = section[1:]
        elif head == ":goal":
            goal_form = section[1]
        else:
            raise ParseError(f"unknown problem section {head!r}")

    obj_id = {o: i for i, o in enumerate(objects)}

    def parse_ground_atom(f):
        if not isinstance(f, list) or not f:
            raise ParseError("malformed atom in :init")
        psym = _sym(f[0], "predicate name")
        if psym.text not in domain.pred_id or domain.kind(domain.pred_id[psym.text]) not in (
            FLUENT,
            STATIC,
        ):
            raise ParseError(f"undeclared predicate {psym.text}", psym.line, psym.col)
        pid = domain.pred_id[psym.text]
        if domain.predicates[pid].arity != len(f) - 1:
            raise ParseError(f"arity mismatch for {psym.text}", psym.line, psym.col)
        terms = []
        for t in f[1:]:
            tsym = _sym(t, "term")
            if tsym.text not in obj_id:
                raise ParseError(f"unknown object {tsym.text}", tsym.line, tsym.col)
            terms.append(obj_id[tsym.text])
        return (pid,) + tuple(terms)

    init = frozenset(parse_ground_atom(f) for f in init_forms)
    if goal_form is None:
        raise ParseError("problem has no :goal")
    goal = _parse_goal(goal_form, domain, obj_id)
    return Problem(domain, name, tuple(objects), init, goal, obj_id)


def _parse_goal(form, domain: Domain, obj_id: dict) -> QuantifiedGoal:
    variables = []
    if _head(form) == "exists":
        for v in form[1]:
            vsym = _sym(v, "goal variable")
            if not vsym.text.startswith("?"):
                raise ParseError(f"goal variable {vsym.text} must start with '?'", vsym.line, vsym.col)
            if vsym.text in variables:
                raise ParseError(f"duplicate goal variable {vsym.text}", vsym.line, vsym.col)
            if vsym.text[1:] in obj_id:
                raise ParseError(
                    f"goal variable {vsym.text} shadows object {vsym.text[1:]}",
                    vsym.line,
                    vsym.col,
                )
            variables.append(vsym.text)
        body = form[2]
    else:
        body = form
    var_idx = {v: i for i, v in enumerate(variables)}
    items = body[1:] if _head(body) == "and" else [body]

    def parse_term(t):
        tsym = _sym(t, "term")
        if tsym.text.startswith("?"):
            if tsym.text not in var_idx:
                raise ParseError(f"undeclared goal variable {tsym.text}", tsym.line, tsym.col)
            return var_term(var_idx[tsym.text])
        if tsym.text not in obj_id:
            raise ParseError(f"unknown object {tsym.text}", tsym.line, tsym.col)
        return obj_id[tsym.text]

    atoms = []
    neq = []
    for item in items:
        if not isinstance(item, list) or not item:
            raise ParseError("malformed goal conjunct")
        psym = _sym(item[0], "predicate name")
        pname = psym.text
        if pname == "neq":
            if len(item) != 3:
                raise ParseError("neq takes exactly two terms", psym.line, psym.col)
            a, b = parse_term(item[1]), parse_term(item[2])
            neq.append((a, b) if a <= b else (b, a))
            continue
        if pname not in domain.pred_id:
            raise ParseError(f"undeclared predicate {pname}", psym.line, psym.col)
        pid = domain.pred_id[pname]
        # Goals may be written with marker names; store the base predicate.
        if domain.kind(pid) == GOAL_MARKER:
            pid = domain.marker_base[pid]
        elif domain.kind(pid) == BUILTIN:
            raise ParseError(f"predicate {pname} may not appear in goals", psym.line, psym.col)
        if domain.predicates[pid].arity != len(item) - 1:
            raise ParseError(f"arity mismatch for {pname}", psym.line, psym.col)
        atoms.append((pid,) + tuple(parse_term(t) for t in item[1:]))
    return QuantifiedGoal(tuple(variables), tuple(atoms), tuple(sorted(set(neq))))


def parse_text(text: str, domain: Domain | None = None):
    """Parse a file that may contain a domain form, a problem form, or both.

    Returns ``(domain, problem)``; either may be None if absent.
    """
    forms = _read_forms(text)
    problem = None
    for form in forms:
        if _head(form) != "define":
            raise ParseError("expected (define ...) forms")
        what = _head(form[1])
        if what == "domain":
            domain = _parse_domain_form(form)
        elif what == "problem":
            if domain is None:
                raise ParseError("problem form found before any domain")
            problem = _parse_problem_form(form, domain)
        else:
            raise ParseError(f"cannot define {what!r}")
    return domain, problem


# ---------------------------------------------------------------------------
# Printing (canonical; parse -> print -> parse is identity).


def format_term(term, objects, variables) -> str:
    if is_var(term):
        return variables[var_index(term)]
    return objects[term]


def format_atom(domain, atom, objects, variables=()) -> str:
    name = domain.predicates[atom[0]].name
    parts = [name] + [format_term(t, objects, variables) for t in atom[1:]]
    return "(" + " ".join(parts) + ")"


def print_domain(domain: Domain) -> str:
    lines = [f"(define (domain {domain.name})"]
    decls = " ".join(
        "(" + " ".join([p.name] + [f"?x{i}" for i in range(p.arity)]) + ")"
        for p in domain.declared()
    )
    lines.append(f"  (:predicates {decls})")
    statics = [p.name for p in domain.declared() if p.kind == STATIC]
    if statics:
        lines.append(f"  (:static {' '.join(statics)})")
    if domain.constants:
        lines.append(f"  (:constants {' '.join(domain.constants)})")
    for schema in domain.schemas:
        if schema.comment:
            lines.append(f"  ; {schema.comment}")
        params = " ".join(schema.params)
        fmt = lambda a: format_atom(domain, a, domain.constants, schema.params)
        pre = " ".join(fmt(a) for a in schema.pre)
        eff = " ".join(
            [fmt(a) for a in schema.add] + [f"(not {fmt(a)})" for a in schema.delete]
        )
        lines.append(
            f"  (:action {schema.name} :parameters ({params}) "
            f":precondition (and {pre}) :effect (and {eff}))"
        )
    lines.append(")")
    return "\n".join(lines) + "\n"


def print_problem(problem: Problem) -> str:
    domain = problem.domain
    lines = [f"(define (problem {problem.name})", f"  (:domain {domain.name})"]
    extra = problem.objects[len(domain.constants):]
    lines.append(f"  (:objects {' '.join(extra)})".replace(" )", ")"))
    init = " ".join(format_atom(domain, a, problem.objects) for a in sorted(problem.init))
    lines.append(f"  (:init {init})")
    goal = problem.goal
    parts = [format_atom(domain, a, problem.objects, goal.variables) for a in goal.atoms]
    parts += [
        f"(neq {format_term(a, problem.objects, goal.variables)} "
        f"{format_term(b, problem.objects, goal.variables)})"
        for a, b in goal.neq
    ]
    body = "(and " + " ".join(parts) + ")"
    if goal.variables:
        lines.append(f"  (:goal (exists ({' '.join(goal.variables)}) {body}))")
    else:
        lines.append(f"  (:goal {body})")
    lines.append(")")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Grounding and successor generation.


def _subst(atom, args):
    return (atom[0],) + tuple(args[var_index(t)] if is_var(t) else t for t in atom[1:])


def ground_actions(problem: Problem) -> tuple:
    """All instantiations whose static preconditions hold in init's statics.

    Static facts never change (statics are barred from effects), so this
    pruning cannot remove an action applicable in any reachable state.  The
    output order is deterministic: schemas in declaration order, bindings in
    lexicographic object order.
    """
    domain = problem.domain
    statics = problem.statics
    n = problem.n_objects
    out = []
    for schema in domain.schemas:
        static_pre = [a for a in schema.pre if domain.kind(a[0]) == STATIC]
        # Check a static atom as soon as its last parameter is bound.
        by_depth = [[] for _ in range(len(schema.params) + 1)]
        for a in static_pre:
            depth = max((var_index(t) + 1 for t in a[1:] if is_var(t)), default=0)
            by_depth[depth].append(a)
        if any(a not in statics for a in by_depth[0]):
            continue

        args = [0] * len(schema.params)

        def emit(rec_depth):
            if rec_depth == len(schema.params):
                pre = frozenset(_subst(a, args) for a in schema.pre)
                add = frozenset(_subst(a, args) for a in schema.add)
                delete = frozenset(_subst(a, args) for a in schema.delete) - add
                arg_names = " ".join(problem.objects[a] for a in args)
                name = f"({schema.name} {arg_names})" if args else f"({schema.name})"
                out.append(
                    GroundAction(name, schema.name, tuple(args), pre, add, delete)
                )
                return
            for obj in range(n):
                args[rec_depth] = obj
                if all(_subst(a, args) in statics for a in by_depth[rec_depth + 1]):
                    emit(rec_depth + 1)

        emit(0)
    return tuple(out)


def applicable(state: frozenset, actions) -> list:
    return [a for a in actions if a.pre <= state]


def apply_action(state: frozenset, action: GroundAction, check: bool = True) -> frozenset:
    if check and not action.pre <= state:
        missing = sorted(action.pre - state)
        raise InapplicableActionError(
            f"action {action.name} not applicable: missing {missing}"
        )
    return (state - action.delete) | action.add


@dataclass(frozen=True)
class PlanCheck:
    valid: bool
    cost: int | None = None
    failed_step: int | None = None
    reason: str | None = None


def validate_plan(problem: Problem, plan) -> PlanCheck:
    """Replay a plan from init; valid iff every step applies and the final
    state satisfies the (possibly quantified) goal.  Cost is plan length."""
    from . import goals

    state = problem.init
    for i, action in enumerate(plan):
        if not action.pre <= state:
            return PlanCheck(False, None, i, f"precondition of {action.name} not satisfied")
        state = apply_action(state, action, check=False)
    if goals.satisfies(state, problem.goal, problem.n_objects) is None:
        return PlanCheck(False, None, len(plan), "final state does not satisfy the goal")
    return PlanCheck(True, len(plan))
