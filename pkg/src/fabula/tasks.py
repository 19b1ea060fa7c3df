"""Narrative and classical task structures plus well-formedness checking."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .model import (
    CHARACTER_TYPE,
    INTENDS,
    ROOT_TYPE,
    Atom,
    AnyAtom,
    Literal,
    ModalAtom,
    TypeTree,
    is_var,
)

Params = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Distinct:
    """Parameter constraint: the tuples of left and right terms are not equal."""

    pairs: tuple[tuple[str, str], ...]

    def __str__(self) -> str:
        eqs = [f"(= {a} {b})" for a, b in self.pairs]
        if len(eqs) == 1:
            return f"(not {eqs[0]})"
        return f"(not (and {' '.join(eqs)}))"

    def holds(self, binding: Mapping[str, str]) -> bool:
        return any(binding.get(a, a) != binding.get(b, b) for a, b in self.pairs)


@dataclass(frozen=True)
class NotExists:
    """``(not (exists (?w - T) (and (not (= ?w x))... (atom ?w ...))))``."""

    var: str
    vtype: str
    atom: Atom
    exclude: tuple[str, ...] = ()

    def __str__(self) -> str:
        body = str(self.atom)
        if self.exclude:
            guards = " ".join(f"(not (= {self.var} {x}))" for x in self.exclude)
            body = f"(and {guards} {body})"
        return f"(not (exists ({self.var} - {self.vtype}) {body}))"


@dataclass(frozen=True)
class ActionSchema:
    """A lifted narrative action.  No actors means a happening."""

    name: str
    params: Params
    actors: tuple[str, ...] = ()
    pre: tuple[Literal, ...] = ()
    eff: tuple[Literal, ...] = ()
    distinct: tuple[Distinct, ...] = ()
    plan_ordering: tuple[tuple[Literal, tuple[Literal, ...]], ...] = ()
    origin: Optional[str] = None
    line: int = 0

    @property
    def is_happening(self) -> bool:
        return not self.actors

    @property
    def source(self) -> str:
        return self.origin or self.name

    @property
    def param_types(self) -> dict[str, str]:
        return dict(self.params)


@dataclass
class NarrativeDomain:
    name: str
    types: TypeTree
    predicates: dict[str, Params]
    actions: tuple[ActionSchema, ...]
    constants: dict[str, str] = field(default_factory=dict)
    requirements: tuple[str, ...] = ()

    def action(self, name: str) -> ActionSchema:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    @property
    def arities(self) -> dict[str, int]:
        return {p: len(args) for p, args in self.predicates.items()}


@dataclass
class NarrativeProblem:
    name: str
    domain_name: str
    objects: dict[str, str]
    init: tuple[AnyAtom, ...]
    outcome: tuple[Atom, ...]

    @property
    def init_facts(self) -> tuple[Atom, ...]:
        return tuple(a for a in self.init if isinstance(a, Atom))

    @property
    def init_intentions(self) -> tuple[ModalAtom, ...]:
        return tuple(a for a in self.init if isinstance(a, ModalAtom))


@dataclass(frozen=True)
class Schema:
    """Classical lifted action schema (all modal atoms already flattened)."""

    name: str
    params: Params
    pre: tuple[Literal, ...] = ()
    eff: tuple[Literal, ...] = ()
    distinct: tuple[Distinct, ...] = ()
    forbid: tuple[NotExists, ...] = ()


@dataclass
class ClassicalTask:
    name: str
    types: TypeTree
    predicates: dict[str, Params]
    objects: dict[str, str]
    schemas: tuple[Schema, ...]
    init: frozenset[Atom]
    goal: tuple[Atom, ...]
    bookkeeping: frozenset[str] = frozenset()
    """Predicates whose ground facts hold initially and are goals exactly when
    some reachable action deletes them (justification facts)."""


def all_objects(domain: NarrativeDomain, problem: NarrativeProblem) -> dict[str, str]:
    objs = dict(domain.constants)
    objs.update(problem.objects)
    return objs


def agent_type(types: TypeTree) -> str:
    return CHARACTER_TYPE if CHARACTER_TYPE in types else ROOT_TYPE


def character_objects(domain: NarrativeDomain, problem: NarrativeProblem) -> list[str]:
    """Objects that may act or hold intentions, sorted."""
    objs = all_objects(domain, problem)
    if CHARACTER_TYPE in domain.types:
        return sorted(o for o, t in objs.items() if domain.types.is_subtype(t, CHARACTER_TYPE))
    agent_types = set()
    for a in domain.actions:
        pt = a.param_types
        agent_types.update(pt[x] for x in a.actors if x in pt)
        for e in a.eff:
            if e.is_intends:
                ag = e.atom.agent
                agent_types.add(pt.get(ag, ROOT_TYPE) if is_var(ag) else objs.get(ag, ROOT_TYPE))
    for m in problem.init_intentions:
        agent_types.add(objs.get(m.agent, ROOT_TYPE))
    return sorted(o for o, t in objs.items() if any(domain.types.is_subtype(t, at) for at in agent_types))


# ── well-formedness ──────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Diagnostic:
    location: str
    category: str
    message: str

    def __str__(self) -> str:
        return f"{self.location}: [{self.category}] {self.message}"


def _check_atom(atom: Atom, where: str, domain: NarrativeDomain, term_types: Mapping[str, str], out: list) -> None:
    decl = domain.predicates.get(atom.predicate)
    if decl is None:
        out.append(Diagnostic(where, "unknown predicate", f"{atom.predicate} is not declared"))
        return
    if len(decl) != len(atom.args):
        out.append(Diagnostic(where, "arity", f"{atom} expects {len(decl)} arguments"))
        return
    for term, (_, ptype) in zip(atom.args, decl):
        ttype = term_types.get(term)
        if ttype is None:
            kind = "unknown variable" if is_var(term) else "unknown object"
            out.append(Diagnostic(where, kind, f"{term} in {atom}"))
        elif not domain.types.compatible(ttype, ptype):
            out.append(Diagnostic(where, "type", f"{term} - {ttype} does not fit {ptype} in {atom}"))


def _check_extended(lit: Literal, where: str, domain, term_types, out: list, allow_intends: bool) -> None:
    a = lit.atom
    if isinstance(a, Atom):
        _check_atom(a, where, domain, term_types, out)
        return
    if a.modality != INTENDS:
        out.append(Diagnostic(where, "reserved modality in input", f"{a.modality} is compiler-only"))
        return
    if not allow_intends:
        out.append(Diagnostic(where, "intends not allowed here", str(lit)))
        return
    if not lit.positive:
        out.append(Diagnostic(where, "negative intends", f"{lit} is not supported in input"))
    agent_t = term_types.get(a.agent)
    if agent_t is None:
        out.append(Diagnostic(where, "unknown object" if not is_var(a.agent) else "unknown variable", a.agent))
    elif CHARACTER_TYPE in domain.types and not domain.types.compatible(agent_t, CHARACTER_TYPE):
        out.append(Diagnostic(where, "type", f"intends agent {a.agent} - {agent_t} is not a character"))
    _check_atom(a.inner, where, domain, term_types, out)


def check_wellformed(domain: NarrativeDomain, problem: Optional[NarrativeProblem] = None) -> list[Diagnostic]:
    """Return diagnostics; an empty list means the inputs are well formed."""
    out: list[Diagnostic] = []
    const_types = dict(domain.constants)
    for name, t in const_types.items():
        if t not in domain.types:
            out.append(Diagnostic(f"constant {name}", "type", f"undeclared type {t}"))
    for pred, params in domain.predicates.items():
        for v, t in params:
            if t not in domain.types:
                out.append(Diagnostic(f"predicate {pred}", "type", f"undeclared type {t}"))
    seen = set()
    for act in domain.actions:
        where = f"action {act.name} (line {act.line})"
        if act.name in seen:
            out.append(Diagnostic(where, "duplicate action", act.name))
        seen.add(act.name)
        types = dict(const_types)
        for v, t in act.params:
            if not is_var(v):
                out.append(Diagnostic(where, "parameter", f"{v} must start with ?"))
            if t not in domain.types:
                out.append(Diagnostic(where, "type", f"undeclared type {t} for {v}"))
            types[v] = t
        for x in act.actors:
            if x not in act.param_types:
                out.append(Diagnostic(where, "actor not a parameter", x))
            elif CHARACTER_TYPE in domain.types and not domain.types.compatible(types[x], CHARACTER_TYPE):
                out.append(Diagnostic(where, "type", f"actor {x} - {types[x]} is not a character"))
        for lit in act.pre:
            _check_extended(lit, where, domain, types, out, allow_intends=False)
        for lit in act.eff:
            _check_extended(lit, where, domain, types, out, allow_intends=True)
        effs = {(l.atom, l.positive) for l in act.eff}
        for atom, polarity in effs:
            if (atom, not polarity) in effs and polarity:
                out.append(Diagnostic(where, "effect conflict", f"{atom} both added and deleted"))
        for d in act.distinct:
            for t in (x for pair in d.pairs for x in pair):
                if t not in types:
                    out.append(Diagnostic(where, "unknown variable", f"{t} in {d}"))
        for target, already in act.plan_ordering:
            if target not in act.pre:
                out.append(Diagnostic(where, "plan-ordering", f"{target} is not a precondition"))
            for lit in already:
                if lit not in act.pre:
                    out.append(Diagnostic(where, "plan-ordering", f"{lit} is not a precondition"))
    if problem is None:
        return out
    objs = all_objects(domain, problem)
    for name, t in problem.objects.items():
        if t not in domain.types:
            out.append(Diagnostic(f"object {name}", "type", f"undeclared type {t}"))
    for a in problem.init:
        lit = Literal(a, True)
        _check_extended(lit, "init", domain, objs, out, allow_intends=True)
        if isinstance(a, ModalAtom) and not a.is_ground():
            out.append(Diagnostic("init", "not ground", str(a)))
        if isinstance(a, Atom) and not a.is_ground():
            out.append(Diagnostic("init", "not ground", str(a)))
    if not problem.outcome:
        out.append(Diagnostic("outcome", "outcome non-empty", "the story outcome must not be empty"))
    for g in problem.outcome:
        if not isinstance(g, Atom):
            out.append(Diagnostic("outcome", "goal not plain", str(g)))
            continue
        _check_atom(g, "outcome", domain, objs, out)
    return out


def iter_atoms(lits: Iterable[Literal]):
    for l in lits:
        yield l.atom
