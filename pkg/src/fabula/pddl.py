"""Reader for the narrative PDDL dialect and writer/reader for classical PDDL.

The narrative dialect is STRIPS + typing + negative preconditions, extended
with ``:actors`` lists, ``(intends <term> (<pred> ...))`` effects and initial
facts, an optional ``:plan-ordering`` section per action and ``:outcome``
(``:goal`` is accepted as an alias).  Symbols are case-insensitive and are
normalised to lower case; ``;`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .model import (
    DELEGATED,
    INTENDS,
    JUSTIFIED,
    ROOT_TYPE,
    Atom,
    Literal,
    ModalAtom,
    ModelError,
    TypeTree,
    is_var,
)
from .tasks import (
    ActionSchema,
    ClassicalTask,
    Diagnostic,
    Distinct,
    NarrativeDomain,
    NarrativeProblem,
    NotExists,
    Schema,
    check_wellformed,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, column {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class WellFormednessError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


# ── s-expressions ────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Sym:
    value: str
    line: int
    col: int

    def __str__(self) -> str:
        return self.value


class SList(list):
    line = 0
    col = 0


_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s()]+")


def read_sexprs(text: str) -> list:
    stack: list[SList] = [SList()]
    line, line_start = 1, 0
    for m in _TOKEN.finditer(text):
        tok = m.group(0)
        col = m.start() - line_start + 1
        if tok[0].isspace() or tok[0] == ";":
            nl = tok.count("\n")
            if nl:
                line += nl
                line_start = m.start() + tok.rfind("\n") + 1
            continue
        if tok == "(":
            node = SList()
            node.line, node.col = line, col
            stack[-1].append(node)
            stack.append(node)
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line, col)
            stack.pop()
        else:
            stack[-1].append(Sym(tok.lower(), line, col))
    if len(stack) != 1:
        open_node = stack[-1]
        raise ParseError("unclosed '('", open_node.line, open_node.col)
    return list(stack[0])


def _pos(node) -> tuple[int, int]:
    return getattr(node, "line", 0), getattr(node, "col", 0)


def _sym(node, what: str) -> str:
    if not isinstance(node, Sym):
        raise ParseError(f"expected {what}", *_pos(node))
    return node.value


def _head(node) -> Optional[str]:
    if isinstance(node, SList) and node and isinstance(node[0], Sym):
        return node[0].value
    return None


def _typed_list(node, allow_vars: bool = True) -> list[tuple[str, str]]:
    """Parse ``a b - t c`` into [(a, t), (b, t), (c, object)]."""
    if not isinstance(node, SList):
        raise ParseError("expected a typed list", *_pos(node))
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    items = list(node)
    i = 0
    while i < len(items):
        s = _sym(items[i], "a name")
        if s == "-":
            if i + 1 >= len(items) or not pending:
                raise ParseError("dangling '-' in typed list", items[i].line, items[i].col)
            t = _sym(items[i + 1], "a type name")
            out.extend((p, t) for p in pending)
            pending = []
            i += 2
            continue
        if is_var(s) and not allow_vars:
            raise ParseError(f"variable {s} not allowed here", items[i].line, items[i].col)
        pending.append(s)
        i += 1
    out.extend((p, ROOT_TYPE) for p in pending)
    return out


def _keyword_sections(items: list, start: int) -> list[tuple[str, list]]:
    """Split ``:key value...`` runs into (key, values)."""
    out: list[tuple[str, list]] = []
    for node in items[start:]:
        if isinstance(node, Sym) and node.value.startswith(":"):
            out.append((node.value, []))
        elif not out:
            raise ParseError("expected a :keyword", *_pos(node))
        else:
            out[-1][1].append(node)
    return out


# ── formulas ─────────────────────────────────────────────────────────────────


def _atom(node) -> Atom:
    if not isinstance(node, SList) or not node:
        raise ParseError("expected an atom", *_pos(node))
    pred = _sym(node[0], "a predicate name")
    args = []
    for a in node[1:]:
        if isinstance(a, SList):
            raise ParseError(f"nested formula inside atom ({pred} ...)", *_pos(a))
        args.append(a.value)
    return Atom(pred, tuple(args))


def _modal_or_atom(node):
    head = _head(node)
    if head == INTENDS or head == DELEGATED:
        if len(node) != 3:
            raise ParseError(f"({head} <agent> (<pred> ...)) expected", *_pos(node))
        agent = _sym(node[1], "an agent term")
        inner_head = _head(node[2])
        if inner_head in (INTENDS, DELEGATED, JUSTIFIED):
            raise ParseError(f"nested {inner_head} inside {head} is not allowed", *_pos(node[2]))
        if inner_head == "not":
            raise ParseError(f"negative literal inside {head} is not supported", *_pos(node[2]))
        return ModalAtom(head, agent, _atom(node[2]))
    if head == JUSTIFIED:
        if len(node) != 3:
            raise ParseError("(justified (<pred> ...) (intends ...)) expected", *_pos(node))
        intention = _modal_or_atom(node[2])
        if not isinstance(intention, ModalAtom) or intention.modality != INTENDS:
            raise ParseError("second argument of justified must be an intends literal", *_pos(node[2]))
        return ModalAtom(JUSTIFIED, None, _atom(node[1]), intention)
    return _atom(node)


def _conjuncts(node) -> list:
    if isinstance(node, SList) and _head(node) == "and":
        return list(node[1:])
    if isinstance(node, SList) and not node:
        return []
    return [node]


def _literal(node) -> Literal:
    if _head(node) == "not":
        if len(node) != 2:
            raise ParseError("(not <atom>) expected", *_pos(node))
        return Literal(_modal_or_atom(node[1]), False)
    return Literal(_modal_or_atom(node), True)


def _distinct(node) -> Optional[Distinct]:
    """Recognise ``(not (= a b))`` and ``(not (and (= a b) ...))``."""
    if _head(node) != "not" or len(node) != 2:
        return None
    inner = node[1]
    if _head(inner) == "=":
        return Distinct(((_sym(inner[1], "term"), _sym(inner[2], "term")),))
    if _head(inner) == "and" and len(inner) > 1 and all(_head(c) == "=" for c in inner[1:]):
        return Distinct(tuple((_sym(c[1], "term"), _sym(c[2], "term")) for c in inner[1:]))
    return None


def _not_exists(node) -> Optional[NotExists]:
    if _head(node) != "not" or len(node) != 2 or _head(node[1]) != "exists":
        return None
    ex = node[1]
    if len(ex) != 3:
        raise ParseError("(exists (<var>) <body>) expected", *_pos(ex))
    bound = _typed_list(ex[1])
    if len(bound) != 1:
        raise ParseError("only single-variable existentials are supported", *_pos(ex))
    var, vtype = bound[0]
    exclude = []
    atom = None
    for c in _conjuncts(ex[2]):
        d = _distinct(c)
        if d is not None:
            (a, b), = d.pairs
            if a != var:
                raise ParseError("existential guard must constrain the bound variable", *_pos(c))
            exclude.append(b)
        elif atom is None and _head(c) not in ("not", "and", "exists"):
            atom = _atom(c)
        else:
            raise ParseError("unsupported existential body", *_pos(c))
    if atom is None:
        raise ParseError("existential without an atom", *_pos(ex))
    return NotExists(var, vtype, atom, tuple(exclude))


# ── narrative domain / problem ───────────────────────────────────────────────


def _define(text: str, kind: str):
    """Find the ``(define (<kind> <name>) ...)`` form in ``text``.

    A file may hold a domain and a problem side by side.
    """
    forms = read_sexprs(text)
    for f in forms:
        if _head(f) != "define":
            raise ParseError("expected (define ...) forms only", *_pos(f))
    matches = [f for f in forms if len(f) >= 2 and _head(f[1]) == kind]
    if len(matches) != 1:
        where = _pos(forms[0]) if forms else (1, 1)
        raise ParseError(f"expected exactly one (define ({kind} <name>) ...) form", *where)
    root = matches[0]
    if len(root[1]) != 2:
        raise ParseError(f"expected ({kind} <name>)", *_pos(root[1]))
    return root, _sym(root[1][1], f"{kind} name")


def _parse_types(values) -> TypeTree:
    tree = TypeTree()
    node = SList(values)
    for child, parent in _typed_list(node, allow_vars=False):
        tree.add(child, parent)
    return tree


def _parse_action(node, keyword_start: int = 2) -> dict:
    if len(node) < 2:
        raise ParseError("action without a name", *_pos(node))
    name = _sym(node[1], "an action name")
    sections = _keyword_sections(list(node), keyword_start)
    if not sections:
        raise ParseError(f"empty action body for {name}", *_pos(node))
    out = {"name": name, "line": node.line}
    for key, vals in sections:
        if len(vals) != 1:
            raise ParseError(f"{key} takes exactly one argument", *_pos(node))
        out[key] = vals[0]
    return out


def parse_narrative_domain(text: str, check: bool = True) -> NarrativeDomain:
    root, name = _define(text, "domain")
    types = TypeTree()
    predicates: dict[str, tuple] = {}
    constants: dict[str, str] = {}
    requirements: tuple[str, ...] = ()
    actions: list[ActionSchema] = []
    for sec in root[2:]:
        head = _head(sec)
        if head == ":requirements":
            requirements = tuple(_sym(s, "requirement") for s in sec[1:])
        elif head == ":types":
            types = _parse_types(sec[1:])
        elif head == ":constants":
            constants.update(_typed_list(SList(sec[1:]), allow_vars=False))
        elif head == ":predicates":
            for p in sec[1:]:
                if not isinstance(p, SList) or not p:
                    raise ParseError("expected a predicate declaration", *_pos(p))
                pname = _sym(p[0], "predicate name")
                predicates[pname] = tuple(_typed_list(SList(p[1:])))
        elif head == ":action":
            actions.append(_narrative_action(sec))
        else:
            raise ParseError(f"unknown domain section {head}", *_pos(sec))
    dom = NarrativeDomain(name, types, predicates, tuple(actions), constants, requirements)
    if check:
        diags = check_wellformed(dom)
        if diags:
            raise WellFormednessError(diags)
    return dom


def _narrative_action(sec) -> ActionSchema:
    a = _parse_action(sec)
    allowed = {":parameters", ":actors", ":precondition", ":effect", ":plan-ordering"}
    for key in a:
        if key.startswith(":") and key not in allowed:
            raise ParseError(f"unknown action keyword {key}", *_pos(sec))
    params = tuple(_typed_list(a.get(":parameters", SList())))
    actors: tuple[str, ...] = ()
    if ":actors" in a:
        node = a[":actors"]
        if not isinstance(node, SList):
            raise ParseError(":actors expects a list", *_pos(node))
        actors = tuple(_sym(x, "an actor variable") for x in node)
    pre, distinct = [], []
    for c in _conjuncts(a.get(":precondition", SList())):
        d = _distinct(c)
        if d is not None:
            distinct.append(d)
        else:
            pre.append(_literal(c))
    eff = [_literal(c) for c in _conjuncts(a.get(":effect", SList()))]
    ordering = []
    if ":plan-ordering" in a:
        node = a[":plan-ordering"]
        if not isinstance(node, SList):
            raise ParseError(":plan-ordering expects a list of entries", *_pos(node))
        for entry in node:
            if not isinstance(entry, SList) or not entry:
                raise ParseError("plan-ordering entry must be ((<target>) (<already>)...)", *_pos(entry))
            target = _literal(entry[0])
            ordering.append((target, tuple(_literal(x) for x in entry[1:])))
    return ActionSchema(
        a["name"], params, actors, tuple(pre), tuple(eff), tuple(distinct), tuple(ordering), line=a["line"]
    )


def parse_narrative_problem(text: str, domain: NarrativeDomain, check: bool = True) -> NarrativeProblem:
    root, name = _define(text, "problem")
    dom_name = domain.name
    objects: dict[str, str] = {}
    init = []
    outcome = None
    for sec in root[2:]:
        head = _head(sec)
        if head == ":domain":
            dom_name = _sym(sec[1], "domain name")
            if dom_name != domain.name:
                raise ParseError(f"problem is for domain {dom_name}, not {domain.name}", *_pos(sec))
        elif head == ":objects":
            objects.update(_typed_list(SList(sec[1:]), allow_vars=False))
        elif head == ":init":
            for f in sec[1:]:
                if _head(f) == "not":
                    raise ParseError("negative initial facts are implicit (closed world)", *_pos(f))
                init.append(_modal_or_atom(f))
        elif head in (":outcome", ":goal"):
            if outcome is not None:
                raise ParseError("outcome given twice", *_pos(sec))
            outcome = []
            for c in (_conjuncts(sec[1]) if len(sec) > 1 else []):
                lit = _literal(c)
                if not lit.positive:
                    raise ParseError("outcome literals must be positive", *_pos(c))
                outcome.append(lit.atom)
        elif head == ":requirements":
            continue
        else:
            raise ParseError(f"unknown problem section {head}", *_pos(sec))
    prob = NarrativeProblem(name, dom_name, objects, tuple(init), tuple(outcome or ()))
    if check:
        diags = check_wellformed(domain, prob)
        if diags:
            raise WellFormednessError(diags)
    return prob


def load_narrative(domain_text: str, problem_text: Optional[str] = None, check: bool = True):
    """Parse a domain and problem; both may live in ``domain_text``."""
    domain = parse_narrative_domain(domain_text, check=check)
    problem = parse_narrative_problem(problem_text if problem_text is not None else domain_text, domain, check)
    return domain, problem


# ── classical PDDL ───────────────────────────────────────────────────────────

LIFTED_ADL = "lifted-adl"
GROUND_STRIPS = "ground-strips"


def _fmt_typed(params) -> str:
    return " ".join(f"{v} - {t}" for v, t in params)


def _fmt_conj(items: list[str], indent: str) -> str:
    if not items:
        return "(and)"
    if len(items) == 1:
        return items[0]
    return "(and " + f"\n{indent}     ".join(items) + ")"


def schema_to_pddl(s: Schema) -> str:
    pre = [str(l) for l in s.pre] + [str(f) for f in s.forbid] + [str(d) for d in s.distinct]
    eff = [str(l) for l in s.eff]
    lines = [f"  (:action {s.name}", f"   :parameters ({_fmt_typed(s.params)})"]
    lines.append(f"   :precondition {_fmt_conj(pre, '   ')}")
    lines.append(f"   :effect {_fmt_conj(eff, '   ')})")
    return "\n".join(lines)


def canonical_schema(s: Schema) -> str:
    """Order-independent text form of a schema: one line per parameter, then
    the sorted precondition and effect items.  Used for golden comparisons."""
    lines = [f"action {s.name}"]
    lines += [f"param {v} - {t}" for v, t in s.params]
    pre = [str(l) for l in s.pre] + [str(f) for f in s.forbid] + [str(d) for d in s.distinct]
    lines += [f"pre {x}" for x in sorted(" ".join(x.split()) for x in pre)]
    lines += [f"eff {x}" for x in sorted(" ".join(str(l).split()) for l in s.eff)]
    return "\n".join(lines) + "\n"


def _type_section(types: TypeTree) -> str:
    by_parent: dict[str, list[str]] = {}
    for child, parent in types.items():
        by_parent.setdefault(parent, []).append(child)
    parts = [f"{' '.join(sorted(cs))} - {p}" for p, cs in sorted(by_parent.items())]
    return "  (:types " + "\n          ".join(parts) + ")" if parts else ""


def _domain_text(name, requirements, types, predicates, actions_text) -> str:
    out = [f"(define (domain {name})", f"  (:requirements {' '.join(requirements)})"]
    ts = _type_section(types)
    if ts:
        out.append(ts)
    preds = [f"({p}{' ' + _fmt_typed(args) if args else ''})" for p, args in sorted(predicates.items())]
    out.append("  (:predicates " + "\n               ".join(preds) + ")" if preds else "  (:predicates)")
    out.extend(actions_text)
    out.append(")")
    return "\n".join(out) + "\n"


def _problem_text(name, domain_name, objects, init, goal) -> str:
    by_type: dict[str, list[str]] = {}
    for o, t in objects.items():
        by_type.setdefault(t, []).append(o)
    objs = " ".join(f"{' '.join(sorted(os))} - {t}" for t, os in sorted(by_type.items()))
    out = [f"(define (problem {name})", f"  (:domain {domain_name})", f"  (:objects {objs})"]
    out.append("  (:init " + "\n         ".join(sorted(str(a) for a in init)) + ")")
    goals = [str(g) for g in goal]
    out.append("  (:goal " + _fmt_conj(goals, "       ") + "))")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class PddlText:
    domain: str
    problem: str


def emit_classical_pddl(task: ClassicalTask, mode: str = LIFTED_ADL, ground=None) -> PddlText:
    """Render a classical task as a PDDL domain/problem pair.

    ``lifted-adl`` keeps the negated existentials; ``ground-strips`` writes one
    parameterless action per ground instance (``ground`` may supply an already
    grounded task, otherwise the task is grounded here).
    """
    if mode == LIFTED_ADL:
        reqs = [":strips", ":typing", ":negative-preconditions", ":equality"]
        if any(s.forbid for s in task.schemas):
            reqs.append(":existential-preconditions")
        acts = [schema_to_pddl(s) for s in task.schemas]
        dom = _domain_text(task.name, reqs, task.types, task.predicates, acts)
        prob = _problem_text(f"{task.name}-problem", task.name, task.objects, task.init, task.goal)
        return PddlText(dom, prob)
    if mode != GROUND_STRIPS:
        raise ValueError(f"unknown emit mode {mode!r}")
    from .ground import ground_task

    gt = ground if ground is not None else ground_task(task)
    preds: dict[str, tuple] = {}
    for f in gt.facts:
        preds.setdefault(f.predicate, tuple((f"?a{i}", ROOT_TYPE) for i in range(len(f.args))))
    acts = []
    for a in gt.actions:
        pre = [str(gt.facts[i]) for i in sorted(a.pre)] + [f"(not {gt.facts[i]})" for i in sorted(a.neg)]
        eff = [str(gt.facts[i]) for i in sorted(a.add)] + [f"(not {gt.facts[i]})" for i in sorted(a.dele)]
        s = "\n".join(
            [
                f"  (:action {a.label}",
                "   :parameters ()",
                f"   :precondition {_fmt_conj(pre, '   ')}",
                f"   :effect {_fmt_conj(eff, '   ')})",
            ]
        )
        acts.append(s)
    objects = {o: ROOT_TYPE for f in gt.facts for o in f.args}
    objects.update({o: ROOT_TYPE for o in task.objects})
    dom = _domain_text(f"{task.name}-ground", [":strips", ":negative-preconditions"], TypeTree(), preds, acts)
    init = [gt.facts[i] for i in sorted(gt.init)]
    goal = [gt.facts[i] for i in sorted(gt.goal)]
    prob = _problem_text(f"{task.name}-ground-problem", f"{task.name}-ground", objects, init, goal)
    return PddlText(dom, prob)


def parse_classical(domain_text: str, problem_text: str) -> ClassicalTask:
    """Read classical PDDL as written by :func:`emit_classical_pddl`."""
    root, name = _define(domain_text, "domain")
    types = TypeTree()
    predicates: dict[str, tuple] = {}
    schemas: list[Schema] = []
    constants: dict[str, str] = {}
    for sec in root[2:]:
        head = _head(sec)
        if head == ":requirements":
            continue
        if head == ":types":
            types = _parse_types(sec[1:])
        elif head == ":constants":
            constants.update(_typed_list(SList(sec[1:]), allow_vars=False))
        elif head == ":predicates":
            for p in sec[1:]:
                predicates[_sym(p[0], "predicate name")] = tuple(_typed_list(SList(p[1:])))
        elif head == ":action":
            a = _parse_action(sec)
            params = tuple(_typed_list(a.get(":parameters", SList())))
            pre, forbid, distinct = [], [], []
            for c in _conjuncts(a.get(":precondition", SList())):
                d = _distinct(c)
                ne = _not_exists(c) if d is None else None
                if d is not None:
                    distinct.append(d)
                elif ne is not None:
                    forbid.append(ne)
                else:
                    pre.append(_literal(c))
            eff = [_literal(c) for c in _conjuncts(a.get(":effect", SList()))]
            for l in pre + eff:
                if isinstance(l.atom, ModalAtom):
                    raise ParseError("modal literal in classical PDDL", *_pos(sec))
            schemas.append(Schema(a["name"], params, tuple(pre), tuple(eff), tuple(distinct), tuple(forbid)))
        else:
            raise ParseError(f"unknown domain section {head}", *_pos(sec))
    proot, _ = _define(problem_text, "problem")
    objects = dict(constants)
    init, goal = set(), []
    for sec in proot[2:]:
        head = _head(sec)
        if head == ":objects":
            objects.update(_typed_list(SList(sec[1:]), allow_vars=False))
        elif head == ":init":
            init.update(_atom(f) for f in sec[1:])
        elif head in (":goal", ":outcome"):
            goal = [_literal(c).atom for c in (_conjuncts(sec[1]) if len(sec) > 1 else [])]
    bookkeeping = frozenset(p for p in predicates if p.startswith("justified-"))
    try:
        return ClassicalTask(name, types, predicates, objects, tuple(schemas), frozenset(init), tuple(goal), bookkeeping)
    except ModelError as e:  # pragma: no cover - defensive
        raise ParseError(str(e)) from e
