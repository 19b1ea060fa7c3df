"""Compilation by explicit justification tracking.

Every intentional action is split into one classical action per combination
of an actor intention and a chosen effect.  ``justified`` facts record which
preconditions were established on behalf of which intention and ``delegated``
facts record goals handed to other characters; all justified facts that some
action can delete hold initially and are goals, so every chosen effect must
eventually be consumed inside the same frame of commitment.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .ground import GroundTask, ground_task, prune_fixpoint
from .model import (
    INTENDS,
    Atom,
    Literal,
    ModalAtom,
    ModelError,
    TypeEnv,
    delegated,
    flatten_atom,
    flatten_modal,
    intends,
    is_var,
    justified,
    neg,
    pos,
    substitute,
    unify,
    FlatteningTable,
)
from .tasks import (
    ActionSchema,
    ClassicalTask,
    Distinct,
    NarrativeDomain,
    NarrativeProblem,
    NotExists,
    Params,
    Schema,
    agent_type,
    all_objects,
)

EQUAL, DISTINCT, NOT_APPLICABLE = "equal", "distinct", "n/a"


class CompileError(Exception):
    pass


@dataclass(frozen=True)
class CompileOptions:
    secondary_delegation: bool = False
    make_toggling: bool = False


@dataclass(frozen=True)
class IntentionAtom:
    actor: str
    goal: Atom

    @property
    def modal(self) -> ModalAtom:
        return intends(self.actor, self.goal)


@dataclass(frozen=True)
class ActorChoice:
    """What one actor of a compiled action is doing and why."""

    actor: str
    intention: Atom
    chosen: Literal
    branch: str = NOT_APPLICABLE


@dataclass(frozen=True)
class CompiledSchema:
    schema: Schema
    source: str
    choices: tuple[ActorChoice, ...] = ()
    constraints: tuple[Distinct, ...] = ()
    justified_pairs: frozenset[tuple[str, str]] = frozenset()

    @property
    def name(self) -> str:
        return self.schema.name

    @property
    def is_happening(self) -> bool:
        return not self.choices


@dataclass
class CompiledTask:
    """The lifted classical task plus what is needed to read its plans back."""

    task: ClassicalTask
    metadata: dict[str, CompiledSchema]
    table: FlatteningTable
    ground: Optional[GroundTask] = None
    admissible: frozenset[Atom] = frozenset()
    domain: Optional[NarrativeDomain] = None
    problem: Optional[NarrativeProblem] = None
    stats: dict = field(default_factory=dict)


# ── helpers ──────────────────────────────────────────────────────────────────


def _rename_apart(atom: Atom, suffix: str) -> Atom:
    return Atom(atom.predicate, tuple(a + suffix if is_var(a) else a for a in atom.args))


def _unifiable(a: Atom, a_types: dict, b: Atom, b_types: dict, domain: NarrativeDomain, objects: dict) -> bool:
    b2 = _rename_apart(b, "'")
    terms = dict(objects)
    terms.update(a_types)
    terms.update({v + "'": t for v, t in b_types.items()})
    return unify(a, b2, TypeEnv(domain.types, terms)) is not None


def _positive_plain(lits):
    return [l for l in lits if l.positive and isinstance(l.atom, Atom)]


def intention_candidates(domain: NarrativeDomain, problem: Optional[NarrativeProblem] = None) -> list[str]:
    """Predicates that may appear under intends: in an effect or initially."""
    found = set()
    for a in domain.actions:
        for e in a.eff:
            if e.is_intends:
                found.add(e.atom.inner.predicate)
    if problem is not None:
        for m in problem.init_intentions:
            found.add(m.inner.predicate)
    return sorted(found)


def relevant_effects(
    schema: ActionSchema,
    outcome: Sequence[Atom],
    domain: NarrativeDomain,
    objects: Optional[dict] = None,
    initial_intentions: Sequence[ModalAtom] = (),
) -> list[Literal]:
    """Effects a compiled action may commit to, in declaration order.

    A positive plain effect qualifies if it unifies (respecting types) with a
    positive precondition of some action, an outcome atom, or a goal some
    character may intend (the final step of a frame achieves such a goal);
    every intends effect qualifies.
    """
    objects = dict(domain.constants) if objects is None else objects
    targets = [(l.atom, a.param_types) for a in domain.actions for l in _positive_plain(a.pre)]
    targets += [(l.atom.inner, a.param_types) for a in domain.actions for l in a.eff if l.is_intends]
    targets += [(g, {}) for g in outcome]
    targets += [(m.inner, {}) for m in initial_intentions]
    out = []
    ptypes = schema.param_types
    for e in schema.eff:
        if e.is_intends:
            out.append(e)
        elif e.positive and isinstance(e.atom, Atom):
            if any(_unifiable(e.atom, ptypes, t, tt, domain, objects) for t, tt in targets):
                out.append(e)
    return out


def achievable_predicate_instances(domain: NarrativeDomain):
    """(atom, param types) of every positive plain effect of every action."""
    return [(l.atom, a.param_types) for a in domain.actions for l in _positive_plain(a.eff)]


def _effect_tags(relevant: Sequence[Literal]) -> list[Optional[str]]:
    if len(relevant) < 2:
        return [None] * len(relevant)
    base = [e.atom.inner.predicate if e.is_intends else e.atom.predicate for e in relevant]
    counts = {b: base.count(b) for b in base}
    seen: dict[str, int] = {}
    tags = []
    for b in base:
        if counts[b] > 1:
            seen[b] = seen.get(b, 0) + 1
            tags.append(f"{b}{seen[b]}")
        else:
            tags.append(b)
    return tags


def _fresh_goal_vars(pred: str, domain: NarrativeDomain, taken: set) -> tuple[Atom, Params]:
    decl = domain.predicates[pred]
    names, params = [], []
    for i, (v, t) in enumerate(decl):
        base = v if is_var(v) else f"?y{i}"
        name, n = base, 1
        while name in taken:
            n += 1
            name = f"{base}{n}"
        taken.add(name)
        names.append(name)
        params.append((name, t))
    return Atom(pred, tuple(names)), tuple(params)


# ── per-action compilation ───────────────────────────────────────────────────


@dataclass
class _Branch:
    """One actor's (intention, chosen effect, branch) under construction."""

    actor: str
    goal: Atom
    goal_params: Params
    chosen: Literal
    tag: Optional[str]
    kind: str
    subst: dict
    distinct: Optional[Distinct]


def _actor_branches(schema, actor, pred, chosen, tag, domain, objects, taken) -> list[_Branch]:
    goal, gparams = _fresh_goal_vars(pred, domain, taken)
    if chosen.is_intends or chosen.atom.predicate != pred:
        return [_Branch(actor, goal, gparams, chosen, tag, NOT_APPLICABLE, {}, None)]
    terms = dict(objects)
    terms.update(schema.param_types)
    terms.update(dict(gparams))
    mgu = unify(goal, chosen.atom, TypeEnv(domain.types, terms))
    if mgu is None:
        return [_Branch(actor, goal, gparams, chosen, tag, NOT_APPLICABLE, {}, None)]
    pairs = tuple((y, z) for y, z in zip(goal.args, chosen.atom.args) if y != z)
    return [
        _Branch(actor, goal, gparams, chosen, tag, EQUAL, mgu, None),
        _Branch(actor, goal, gparams, chosen, tag, DISTINCT, {}, Distinct(pairs)),
    ]


def compile_intentional_action(
    schema: ActionSchema,
    choices: Sequence[tuple[str, Literal]],
    domain: NarrativeDomain,
    outcome: Sequence[Atom] = (),
    options: CompileOptions = CompileOptions(),
    objects: Optional[dict] = None,
    achievable: Optional[list] = None,
    delegable: Optional[set] = None,
    initial_intentions: Sequence[ModalAtom] = (),
) -> list[CompiledSchema]:
    """Compile one intentional action for one (intention predicate, chosen
    effect) choice per actor, in actor order.

    Returns one schema, or two (equal / distinct) per actor whose chosen
    effect unifies with its intention.
    """
    if schema.is_happening:
        raise CompileError(f"{schema.name} is a happening")
    if len(choices) != len(schema.actors):
        raise CompileError(f"{schema.name}: need one choice per actor")
    objects = dict(domain.constants) if objects is None else objects
    relevant = relevant_effects(schema, outcome, domain, objects, initial_intentions)
    tags = _effect_tags(relevant)
    for _, chosen in choices:
        if chosen not in relevant:
            raise CompileError(f"{schema.name}: {chosen} is not a relevant effect")
    if achievable is None:
        achievable = achievable_predicate_instances(domain)
    taken = {v for v, _ in schema.params}
    per_actor = []
    for actor, (pred, chosen) in zip(schema.actors, choices):
        tag = tags[relevant.index(chosen)]
        per_actor.append(_actor_branches(schema, actor, pred, chosen, tag, domain, objects, taken))
    out = []
    for combo in itertools.product(*per_actor):
        out.append(_assemble(schema, combo, domain, objects, achievable, delegable, options))
    return out


def _assemble(schema: ActionSchema, combo: Sequence[_Branch], domain, objects, achievable, delegable, options):
    subst: dict[str, str] = {}
    for b in combo:
        subst.update(b.subst)
    wtype = agent_type(domain.types)
    used_vars = {v for v, _ in schema.params} | {v for b in combo for v, _ in b.goal_params}
    wvar, n = "?c", 1
    while wvar in used_vars:
        n += 1
        wvar = f"?c{n}"

    # parameters: source params (types narrowed by equal-branch bindings) ++ goal vars kept
    ptypes = dict(schema.params)
    goal_types = {v: t for b in combo for v, t in b.goal_params}
    for y, z in subst.items():
        if is_var(z) and z in ptypes:
            narrowed = domain.types.meet(ptypes[z], goal_types[y])
            if narrowed is None:
                raise ModelError(f"{schema.name}: cannot narrow {z} to {goal_types[y]}")
            ptypes[z] = narrowed
    params = [(v, ptypes[v]) for v, _ in schema.params]
    for b in combo:
        params += [(v, t) for v, t in b.goal_params if v not in subst]

    def s(x):
        return substitute(subst, x)

    src_pre = list(schema.pre)
    src_eff = list(schema.eff)
    pre: list[Literal] = list(src_pre)
    eff: list[Literal] = list(src_eff)
    forbid: list[NotExists] = []
    distinct = list(schema.distinct)
    var_types = dict(ptypes)
    var_types.update(goal_types)
    seen_forbid = set()

    def add_forbid(atom: Atom, exclude: tuple):
        key = (atom, exclude)
        if key in seen_forbid:
            return
        seen_forbid.add(key)
        if delegable is not None and atom.predicate not in delegable:
            return
        forbid.append(NotExists(wvar, wtype, atom, exclude))

    for b in combo:
        goal = s(b.goal)
        intention = intends(b.actor, goal)
        # (2) the actor holds the intention
        pre.append(pos(intention))
        # (3a) no delegating a goal that is already delegated
        for e in src_eff:
            if e.is_intends:
                excl = (b.actor,) if options.secondary_delegation else ()
                add_forbid(e.atom.inner, excl)
        # (3b)/(3c) no achieving a goal delegated to someone else
        for e in _positive_plain(src_eff):
            if s(e.atom) == goal:
                add_forbid(goal, (b.actor,))
            else:
                add_forbid(e.atom, ())
        # (4) a delegating choice must be the only source of that intention
        chosen = b.chosen
        if chosen.is_intends:
            pre.append(neg(chosen.atom))
            # the delegated goal must still be open, otherwise a step that
            # already achieved it could be the only support of the later
            # justifying step and the delegation would serve nothing
            pre.append(neg(chosen.atom.inner))
        # effects (2): preconditions that some action can establish become justified
        for l in _positive_plain(src_pre):
            if any(_unifiable(l.atom, var_types, t, tt, domain, objects) for t, tt in achievable):
                eff.append(pos(justified(s(l.atom), intention)))
        if chosen.is_intends:
            inner = chosen.atom.inner
            eff.append(neg(justified(inner, intention)))
            eff.append(pos(delegated(chosen.atom.agent, inner)))
            if options.secondary_delegation:
                eff.append(neg(delegated(b.actor, inner)))
        elif s(chosen.atom) != goal:
            eff.append(neg(justified(chosen.atom, intention)))
        else:
            eff.append(neg(delegated(b.actor, s(chosen.atom))))
        if b.distinct is not None:
            distinct.append(b.distinct)

    pairs = frozenset(
        (l.atom.inner.predicate, l.atom.intention.inner.predicate)
        for l in eff
        if isinstance(l.atom, ModalAtom) and l.atom.intention is not None
    )
    pre = [flatten_modal(s(l)) for l in _dedupe(pre)]
    eff = [flatten_modal(s(l)) for l in _dedupe(eff)]
    # equal-branch substitution may turn source constraints into trivial ones
    distinct = [Distinct(tuple((s_term(subst, a), s_term(subst, b)) for a, b in d.pairs)) for d in distinct]
    forbid = [
        NotExists(f.var, f.vtype, flatten_atom(substitute(subst, delegated(f.var, f.atom))), tuple(s_term(subst, x) for x in f.exclude))
        for f in forbid
    ]
    name = schema.name + "".join(_segment(b) for b in combo)
    choices = tuple(ActorChoice(b.actor, s(b.goal), s(b.chosen), b.kind) for b in combo)
    sch = Schema(name, tuple(params), tuple(pre), tuple(_dedupe(eff)), tuple(_dedupe(distinct)), tuple(forbid))
    return CompiledSchema(sch, schema.source, choices, tuple(b.distinct for b in combo if b.distinct), pairs)


def s_term(subst, t):
    return subst.get(t, t)


def _segment(b: _Branch) -> str:
    out = ""
    if b.tag:
        out += f"-{b.tag}"
    if b.kind == EQUAL:
        out += "-1"
    elif b.kind == DISTINCT:
        out += "-2"
    return out + f"-because-intends-{b.goal.predicate}"


def _dedupe(items):
    seen, out = set(), []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def compile_happening(schema: ActionSchema) -> CompiledSchema:
    """Happenings keep their name, preconditions and effects (flattened)."""
    if not schema.is_happening:
        raise CompileError(f"{schema.name} is intentional")
    sch = Schema(
        schema.name,
        schema.params,
        tuple(flatten_modal(l) for l in schema.pre),
        tuple(flatten_modal(l) for l in schema.eff),
        schema.distinct,
    )
    return CompiledSchema(sch, schema.source)


# ── toggling ─────────────────────────────────────────────────────────────────


def plain_effect_toggles(pre: Sequence[Literal], effect: Literal) -> bool:
    """Does the precondition contain the negation of this effect?"""
    return effect.negate() in pre


def make_toggling(schema: ActionSchema) -> list[ActionSchema]:
    """Split an action into variants that are toggling on every plain effect.

    For each plain effect whose negation is not already required, one variant
    requires the negation (and keeps the effect) and one requires the effect's
    literal itself (and drops the now redundant effect).
    """
    open_effects = [e for e in schema.eff if not e.is_modal and not plain_effect_toggles(schema.pre, e)]
    if not open_effects:
        return [schema]
    out = []
    for bits in itertools.product((0, 1), repeat=len(open_effects)):
        pre = list(schema.pre)
        eff = list(schema.eff)
        for bit, e in zip(bits, open_effects):
            if bit == 0:
                pre.append(e.negate())
            else:
                pre.append(e)
                eff.remove(e)
        suffix = "".join(str(b) for b in bits)
        out.append(
            ActionSchema(
                f"{schema.name}-t{suffix}",
                schema.params,
                schema.actors,
                tuple(pre),
                tuple(eff),
                schema.distinct,
                schema.plan_ordering,
                origin=schema.source,
                line=schema.line,
            )
        )
    return out


def toggled_domain(domain: NarrativeDomain) -> NarrativeDomain:
    actions = tuple(v for a in domain.actions for v in make_toggling(a))
    return NarrativeDomain(domain.name, domain.types, domain.predicates, actions, domain.constants, domain.requirements)


# ── whole-task compilation ───────────────────────────────────────────────────


def _flat_predicates(domain: NarrativeDomain, candidates, pairs, table: FlatteningTable) -> dict:
    wtype = agent_type(domain.types)
    preds = dict(domain.predicates)
    for p in candidates:
        decl = domain.predicates[p]
        preds[f"intends-{p}"] = (("?c", wtype),) + tuple(decl)
        preds[f"delegated-{p}"] = (("?c", wtype),) + tuple(decl)
    for q, p in sorted(pairs):
        name = table.add_justified(q, p)
        types = [t for _, t in domain.predicates[q]] + [wtype] + [t for _, t in domain.predicates[p]]
        preds[name] = tuple((f"?a{i}", t) for i, t in enumerate(types))
    return preds


def compile_schemas(
    domain: NarrativeDomain, problem: NarrativeProblem, options: CompileOptions = CompileOptions()
) -> list[CompiledSchema]:
    if options.make_toggling:
        domain = toggled_domain(domain)
    objects = all_objects(domain, problem)
    candidates = intention_candidates(domain, problem)
    achievable = achievable_predicate_instances(domain)
    delegable = {e.atom.inner.predicate for a in domain.actions if not a.is_happening for e in a.eff if e.is_intends}
    out: list[CompiledSchema] = []
    for act in domain.actions:
        if act.is_happening:
            out.append(compile_happening(act))
            continue
        relevant = relevant_effects(act, problem.outcome, domain, objects, problem.init_intentions)
        per_actor = [list(itertools.product(candidates, relevant)) for _ in act.actors]
        for combo in itertools.product(*per_actor):
            out.extend(
                compile_intentional_action(
                    act, combo, domain, problem.outcome, options, objects, achievable, delegable,
                    problem.init_intentions,
                )
            )
    names = [c.name for c in out]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise CompileError(f"compiled action names clash: {', '.join(dup[:5])}")
    return out


def build_compiled_task(
    domain: NarrativeDomain,
    problem: NarrativeProblem,
    options: CompileOptions = CompileOptions(),
    ground: bool = True,
    mem_limit: Optional[int] = None,
) -> CompiledTask:
    """Compile, then (by default) ground and prune to find the admissible
    justified facts, which are added to both the initial state and the goal.

    Wall-clock seconds per phase are recorded in ``stats["seconds"]``.
    """
    t0 = time.perf_counter()
    compiled = compile_schemas(domain, problem, options)
    candidates = intention_candidates(domain, problem)
    table = FlatteningTable(domain.arities)
    pairs = set()
    for c in compiled:
        pairs |= c.justified_pairs
    predicates = _flat_predicates(domain, candidates, pairs, table)
    init = frozenset(flatten_atom(a) for a in problem.init)
    bookkeeping = frozenset(table.add_justified(q, p) for q, p in pairs)
    task = ClassicalTask(
        f"{domain.name}-justified",
        domain.types,
        predicates,
        all_objects(domain, problem),
        tuple(c.schema for c in compiled),
        init,
        tuple(problem.outcome),
        bookkeeping,
    )
    ct = CompiledTask(task, {c.name: c for c in compiled}, table, domain=domain, problem=problem)
    seconds = {"compile": time.perf_counter() - t0}
    ct.stats = {"seconds": seconds}
    if ground:
        kwargs = {} if mem_limit is None else {"mem_limit": mem_limit}
        t0 = time.perf_counter()
        raw = ground_task(task, **kwargs)
        seconds["ground"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        gt = prune_fixpoint(raw)
        seconds["prune"] = time.perf_counter() - t0
        admissible = frozenset(gt.facts[f] for f in gt.bookkeeping)
        ct.ground = gt
        ct.admissible = admissible
        ct.task = ClassicalTask(
            task.name,
            task.types,
            task.predicates,
            task.objects,
            task.schemas,
            task.init | admissible,
            task.goal + tuple(sorted(admissible)),
            task.bookkeeping,
        )
        ct.stats.update(
            {
                "ground_facts": len(raw.facts),
                "ground_actions": len(raw.actions),
                "pruned_facts": len(raw.facts) - len(gt.facts),
                "pruned_actions": len(raw.actions) - len(gt.actions),
            }
        )
    return ct

