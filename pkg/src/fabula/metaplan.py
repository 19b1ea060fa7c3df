"""Compilation by meta-planning.

Characters hold explicit sets of intentions.  A story action by actor x for
chosen effect e requires and consumes ``(intends x e)``; ``plan-to`` actions
let a character adopt a precondition of such an action as a new intention.
A propositional counter ``count-k`` per character tracks how many intentions
it holds, bounded by a depth D, and must be back at zero at the end unless
an excusal condition (e.g. the character died) applies.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .ground import GroundTask, ground_task, prune_fixpoint
from .justify import _unifiable, achievable_predicate_instances, intention_candidates, relevant_effects
from .model import Atom, Literal, flatten_atom, flatten_modal, intends, neg, pos
from .tasks import (
    ActionSchema,
    ClassicalTask,
    Distinct,
    NarrativeDomain,
    NarrativeProblem,
    Schema,
    agent_type,
    all_objects,
    character_objects,
)

DEFAULT_DEPTH = 5
SETTLED = "settled"
STORY_OVER = "story-over"
ACTION, PLAN_TO, HAPPENING, SETTLE, EXCUSE, END = "action", "plan-to", "happening", "settle", "excuse", "end-story"


class MetaError(Exception):
    pass


def count_pred(k: int) -> str:
    return f"count-{k}"


@dataclass(frozen=True)
class MetaSchema:
    schema: Schema
    kind: str
    source: Optional[str] = None
    actors: tuple[str, ...] = ()
    chosen: tuple[Literal, ...] = ()
    target: Optional[Literal] = None  # plan-to: the adopted precondition

    @property
    def name(self) -> str:
        return self.schema.name


@dataclass
class MetaTask:
    task: ClassicalTask
    metadata: dict[str, MetaSchema]
    depth: int
    excused: tuple[Literal, ...] = ()
    excused_characters: tuple[str, ...] = ()
    ground: Optional[GroundTask] = None
    domain: Optional[NarrativeDomain] = None
    problem: Optional[NarrativeProblem] = None
    stats: dict = field(default_factory=dict)


def _count(k: int, who: str) -> Literal:
    return pos(Atom(count_pred(k), (who,)))


def _tag_map(relevant: Sequence[Literal]) -> dict[Literal, str]:
    base = [e.atom.inner.predicate if e.is_intends else e.atom.predicate for e in relevant]
    out, seen = {}, {}
    for e, b in zip(relevant, base):
        if base.count(b) > 1:
            seen[b] = seen.get(b, 0) + 1
            out[e] = f"{b}{seen[b]}"
        else:
            out[e] = b
    return out


def _target(chosen: Literal) -> Atom:
    """The plain goal an actor gives up by performing the action."""
    return chosen.atom.inner if chosen.is_intends else chosen.atom


def _counter_moves(moves: Sequence[tuple[str, int]], depth: int):
    """Counter variants for agents changing by +1/-1.

    Yields (pre, eff, suffix) for each admissible combination of current
    values (decrements need k>=1, increments need k<D).
    """
    ranges = []
    for _, delta in moves:
        ranges.append(range(1, depth + 1) if delta < 0 else range(0, depth))
    for values in itertools.product(*ranges):
        pre, eff = [], []
        for (who, delta), k in zip(moves, values):
            pre.append(_count(k, who))
            eff.append(_count(k, who).negate())
            eff.append(_count(k + delta, who))
        yield pre, eff, "-".join(str(k) for k in values)


def _distinct_agents(agents: Sequence[str]) -> list[Distinct]:
    out = []
    for a, b in itertools.combinations(agents, 2):
        if a == b:
            raise MetaError(f"two counter changes for the same character term {a}")
        out.append(Distinct(((a, b),)))
    return out


def compile_action_meta(
    schema: ActionSchema,
    chosen: Union[Literal, Sequence[Literal]],
    depth: int = DEFAULT_DEPTH,
    name: Optional[str] = None,
) -> list[MetaSchema]:
    """Meta-compile one action for one chosen effect per actor.

    A single literal is accepted for single-actor actions.  Happenings take
    ``chosen=()`` and only get counter increments for their intends effects
    (or are copied unchanged when they have none).
    """
    if isinstance(chosen, Literal):
        chosen = (chosen,)
    if len(chosen) != len(schema.actors):
        raise MetaError(f"{schema.name}: need one chosen effect per actor")
    base = name or schema.name
    pre = list(schema.pre)
    eff = list(schema.eff)
    moves: list[tuple[str, int]] = []
    for actor, ch in zip(schema.actors, chosen):
        goal = intends(actor, _target(ch))
        pre.append(pos(goal))
        eff.append(neg(goal))
        moves.append((actor, -1))
    for e in schema.eff:
        if e.is_intends:
            # adding an intention that is already held would break count = set size
            pre.append(e.negate())
            moves.append((e.atom.agent, +1))
    kind = HAPPENING if schema.is_happening else ACTION
    if not moves:
        sch = Schema(base, schema.params, tuple(flatten_modal(l) for l in pre), tuple(flatten_modal(l) for l in eff), schema.distinct)
        return [MetaSchema(sch, kind, schema.source)]
    merged = _merge_moves(moves)
    distinct = list(schema.distinct) + _distinct_agents([w for w, _ in merged])
    out = []
    for cpre, ceff, suffix in _counter_moves(merged, depth):
        sch = Schema(
            f"{base}-k{suffix}",
            schema.params,
            tuple(flatten_modal(l) for l in pre + cpre),
            tuple(_dedupe(flatten_modal(l) for l in eff + ceff)),
            tuple(distinct),
        )
        out.append(MetaSchema(sch, kind, schema.source, schema.actors, tuple(chosen)))
    return out


def _merge_moves(moves):
    """Combine the counter changes of each character term (a delegation by x
    to z is -1 for x and +1 for z; an actor both consuming and receiving the
    same intention nets out)."""
    net: dict[str, int] = {}
    order: list[str] = []
    for who, d in moves:
        if who not in net:
            order.append(who)
            net[who] = 0
        net[who] += d
    out = []
    for who in order:
        if net[who] not in (-1, 0, 1):
            raise MetaError(f"counter of {who} would change by {net[who]} in one step")
        if net[who]:
            out.append((who, net[who]))
    return out


def _dedupe(items):
    seen, out = set(), []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


def make_plan_to(
    schema: ActionSchema,
    chosen: Literal,
    precond: Literal,
    already: Sequence[Literal] = (),
    depth: int = DEFAULT_DEPTH,
    actor: Optional[str] = None,
    name: Optional[str] = None,
    requires: Sequence[Literal] = (),
) -> list[MetaSchema]:
    """Intention-adoption actions: an actor intending a chosen effect of the
    action may adopt one of its preconditions as a further intention.

    ``requires`` lists extra preconditions of the adoption step (the build
    passes the action's static preconditions, so that characters never adopt
    goals for an action instance that can never be executed).
    """
    if schema.is_happening:
        raise MetaError(f"{schema.name} is a happening")
    actor = schema.actors[0] if actor is None else actor
    if precond not in schema.pre:
        raise MetaError(f"{precond} is not a precondition of {schema.name}")
    for l in already:
        if l not in schema.pre:
            raise MetaError(f"{l} is not a precondition of {schema.name}")
    if not precond.positive or precond.is_modal:
        raise MetaError("only positive plain preconditions can be intended")
    base = name or f"plan-to-{schema.name}-{precond.atom.predicate}"
    new = intends(actor, precond.atom)
    pre = [pos(intends(actor, _target(chosen))), *already, *requires, neg(new)]
    out = []
    for k in range(0, depth):
        sch = Schema(
            f"{base}-k{k}",
            schema.params,
            tuple(_dedupe(flatten_modal(l) for l in pre + [_count(k, actor)])),
            (flatten_modal(pos(new)), _count(k, actor).negate(), _count(k + 1, actor)),
            schema.distinct,
        )
        out.append(MetaSchema(sch, PLAN_TO, schema.source, (actor,), (chosen,), precond))
    return out


def _achievable(lit: Literal, schema: ActionSchema, achievable, domain, objects) -> bool:
    return any(_unifiable(lit.atom, schema.param_types, t, tt, domain, objects) for t, tt in achievable)


def build_meta_task(
    domain: NarrativeDomain,
    problem: NarrativeProblem,
    depth: int = DEFAULT_DEPTH,
    excused: Sequence[Literal] = (),
    ground: bool = True,
    mem_limit: Optional[int] = None,
) -> MetaTask:
    """Compile the whole task.

    ``excused`` holds character conditions over one variable, e.g.
    ``(dead ?c)``: a character for whom such a condition holds at the end
    need not have worked off its intentions.
    """
    t0 = time.perf_counter()
    if depth < 1:
        raise MetaError("depth bound D must be at least 1")
    for lit in excused:
        if lit.is_modal or lit.atom.predicate not in domain.predicates:
            raise MetaError(f"excusal condition {lit} uses an unknown predicate")
        if len(lit.atom.variables) != 1:
            raise MetaError(f"excusal condition {lit} must mention exactly one variable")
    reserved = {count_pred(k) for k in range(depth + 1)} | {SETTLED, STORY_OVER}
    clash = reserved & set(domain.predicates)
    if clash:
        raise MetaError(f"predicate names reserved for counters: {', '.join(sorted(clash))}")
    objects = all_objects(domain, problem)
    wtype = agent_type(domain.types)
    characters = character_objects(domain, problem)
    achievable = achievable_predicate_instances(domain)
    changing = {l.atom.predicate for a in domain.actions for l in a.eff if not l.is_modal}
    metas: list[MetaSchema] = []
    for act in domain.actions:
        if act.is_happening:
            metas.extend(compile_action_meta(act, (), depth))
            continue
        relevant = relevant_effects(act, problem.outcome, domain, objects, problem.init_intentions)
        tags = _tag_map(relevant)
        several = len(relevant) > 1
        for combo in itertools.product(relevant, repeat=len(act.actors)):
            label = act.name + "".join(f"-{tags[c]}" for c in combo) if several else act.name
            metas.extend(compile_action_meta(act, combo, depth, label))
        ordering = {t: tuple(a) for t, a in act.plan_ordering}
        targets = [
            l for l in act.pre if l.positive and not l.is_modal and _achievable(l, act, achievable, domain, objects)
        ]
        names = [l.atom.predicate for l in targets]
        statics = [l for l in act.pre if not l.is_modal and l.atom.predicate not in changing]
        for ai, actor in enumerate(act.actors):
            for ch in relevant:
                for ti, target in enumerate(targets):
                    pname = names[ti] if names.count(names[ti]) == 1 else f"{names[ti]}{names[:ti + 1].count(names[ti])}"
                    parts = ["plan-to", act.name]
                    if several:
                        parts.append(tags[ch])
                    if len(act.actors) > 1:
                        parts.append(f"a{ai + 1}")
                    parts.append(pname)
                    metas.extend(
                        make_plan_to(
                            act, ch, target, ordering.get(target, ()), depth, actor, "-".join(parts), statics
                        )
                    )

    # excusal: characters that may be excused get a "settled" goal instead of count-0
    excusable = []
    for c in characters:
        ctype = objects[c]
        for lit in excused:
            var = lit.atom.variables[0]
            idx = lit.atom.args.index(var)
            ptype = domain.predicates[lit.atom.predicate][idx][1]
            if domain.types.compatible(ctype, ptype):
                excusable.append(c)
                break
    if excusable:
        # settling happens in a closing phase after the last story step, so a
        # settled character can no longer gain intentions
        over = neg(Atom(STORY_OVER, ()))
        metas = [
            MetaSchema(
                Schema(m.name, m.schema.params, m.schema.pre + (over,), m.schema.eff, m.schema.distinct),
                m.kind, m.source, m.actors, m.chosen, m.target,
            )
            for m in metas
        ]
        metas.extend(_excusal_schemas(excused, depth, wtype))

    init_counts = {c: 0 for c in characters}
    for m in problem.init_intentions:
        init_counts[m.agent] = init_counts.get(m.agent, 0) + 1
    for c, n in init_counts.items():
        if n > depth:
            raise MetaError(f"{c} starts with {n} intentions, more than the depth bound {depth}")

    init = {flatten_atom(a) for a in problem.init}
    init |= {Atom(count_pred(n), (c,)) for c, n in init_counts.items()}
    goal = list(problem.outcome)
    for c in characters:
        goal.append(Atom(SETTLED, (c,)) if c in excusable else Atom(count_pred(0), (c,)))
    predicates = dict(domain.predicates)
    for p in intention_candidates(domain, problem) + sorted({t.atom.predicate for m in metas if m.target for t in [m.target]}):
        predicates[f"intends-{p}"] = (("?c", wtype),) + tuple(domain.predicates[p])
    for k in range(depth + 1):
        predicates[count_pred(k)] = (("?c", wtype),)
    if excusable:
        predicates[SETTLED] = (("?c", wtype),)
        predicates[STORY_OVER] = ()
    names = [m.name for m in metas]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise MetaError(f"meta action names clash: {', '.join(dup[:5])}")
    task = ClassicalTask(
        f"{domain.name}-meta",
        domain.types,
        predicates,
        objects,
        tuple(m.schema for m in metas),
        frozenset(init),
        tuple(goal),
    )
    mt = MetaTask(task, {m.name: m for m in metas}, depth, tuple(excused), tuple(excusable), domain=domain, problem=problem)
    seconds = {"compile": time.perf_counter() - t0}
    mt.stats = {"seconds": seconds}
    if ground:
        kwargs = {} if mem_limit is None else {"mem_limit": mem_limit}
        t0 = time.perf_counter()
        raw = ground_task(task, **kwargs)
        seconds["ground"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        mt.ground = prune_fixpoint(raw)
        seconds["prune"] = time.perf_counter() - t0
        mt.stats.update(
            {
                "ground_facts": len(raw.facts),
                "ground_actions": len(raw.actions),
                "pruned_facts": len(raw.facts) - len(mt.ground.facts),
                "pruned_actions": len(raw.actions) - len(mt.ground.actions),
            }
        )
    return mt


def _excusal_schemas(excused: Sequence[Literal], depth: int, wtype: str) -> list[MetaSchema]:
    over = Atom(STORY_OVER, ())
    out = [MetaSchema(Schema(END, (), (neg(over),), (pos(over),)), END)]
    c = "?c"
    settled = Atom(SETTLED, (c,))
    sch = Schema(
        "settle",
        ((c, wtype),),
        (pos(over), _count(0, c), neg(settled)),
        (pos(settled),),
    )
    out.append(MetaSchema(sch, SETTLE))
    for i, lit in enumerate(excused):
        var = lit.atom.variables[0]
        cond = Literal(Atom(lit.atom.predicate, tuple(c if a == var else a for a in lit.atom.args)), lit.positive)
        for k in range(1, depth + 1):
            name = f"excuse-{lit.atom.predicate}" + (f"{i + 1}" if len(excused) > 1 else "") + f"-k{k}"
            sch = Schema(name, ((c, wtype),), (pos(over), cond, _count(k, c), neg(settled)), (pos(settled),))
            out.append(MetaSchema(sch, EXCUSE))
    return out
