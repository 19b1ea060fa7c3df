"""Plan analysis: classical validation, deordering, fabula lifting, frames of
commitment and the intentionality validator.

Step indices used in links and frames are positions in the fabula step list;
``INIT`` (-1) is a pseudo-step adding every initial fact and ``GOAL`` (-2) a
pseudo-step requiring the goal.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence, Union

from .ground import GroundTask
from .justify import CompiledSchema
from .metaplan import ACTION, HAPPENING, PLAN_TO, MetaSchema
from .model import INTENDS, Atom, FlatteningTable, Literal, ModalAtom, intends, substitute
from .tasks import ActionSchema, ClassicalTask, NarrativeDomain, NarrativeProblem, Schema

INIT, GOAL = -1, -2

AnyFact = Union[Atom, ModalAtom]


class AnalysisError(Exception):
    pass


class NoMotivation(AnalysisError):
    """An intentional step has no earlier step (nor init) adding its intention."""


# ── classical validation ─────────────────────────────────────────────────────


@dataclass(frozen=True)
class ClassicalVerdict:
    ok: bool
    step: Optional[int] = None  # failing step position, None for goal failures
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate_classical(gt: GroundTask, plan: Sequence[int]) -> ClassicalVerdict:
    """Execute ``plan`` (action ids) from the initial state."""
    state = set(gt.init)
    for pos_, i in enumerate(plan):
        if not 0 <= i < len(gt.actions):
            return ClassicalVerdict(False, pos_, f"unknown action id {i}")
        a = gt.actions[i]
        missing = a.pre - state
        if missing:
            f = gt.facts[min(missing)]
            return ClassicalVerdict(False, pos_, f"step {pos_} {a}: precondition {f} does not hold")
        clash = a.neg & state
        if clash:
            f = gt.facts[min(clash)]
            return ClassicalVerdict(False, pos_, f"step {pos_} {a}: {f} must be false")
        state = (state - a.dele) | a.add
    unmet = set(gt.goal) - state
    if unmet:
        return ClassicalVerdict(False, None, f"goal {gt.facts[min(unmet)]} not achieved")
    return ClassicalVerdict(True)


# ── deordering ───────────────────────────────────────────────────────────────


@dataclass(frozen=True, order=True)
class CausalLink:
    producer: int
    consumer: int
    fact: AnyFact = field(compare=False)
    fact_key: str = field(default="", compare=True)

    @staticmethod
    def make(producer: int, consumer: int, fact: AnyFact) -> "CausalLink":
        return CausalLink(producer, consumer, fact, str(fact))


@dataclass(frozen=True, order=True)
class MotivationalLink:
    producer: int
    consumer: int
    intention: ModalAtom = field(compare=False)
    key: str = field(default="", compare=True)

    @staticmethod
    def make(producer: int, consumer: int, intention: ModalAtom) -> "MotivationalLink":
        return MotivationalLink(producer, consumer, intention, str(intention))


@dataclass(frozen=True, order=True)
class OrderingConstraint:
    before: int
    after: int


@dataclass
class Deordering:
    links: list[CausalLink]
    orderings: list[OrderingConstraint]
    negative_links: list[CausalLink] = field(default_factory=list)


def deorder(gt: GroundTask, plan: Sequence[int]) -> Deordering:
    """Partial order that every linearization of which is a valid plan.

    Each positive precondition (and goal fact) is supported by its latest
    earlier adder; each negative precondition by the latest earlier deleter
    (or init).  Threatening steps stay on the side of the link they occupy in
    the input sequence.  Links carry step positions in ``plan``.
    """
    verdict = validate_classical(gt, plan)
    if not verdict.ok:
        raise AnalysisError(f"cannot deorder an invalid plan: {verdict.reason}")
    acts = [gt.actions[i] for i in plan]
    last_add: dict[int, int] = {f: INIT for f in gt.init}
    last_del: dict[int, int] = {}
    links: list[tuple[int, int, int]] = []
    nlinks: list[tuple[int, int, int]] = []
    for k, a in enumerate(acts):
        for f in sorted(a.pre):
            links.append((last_add[f], k, f))
        for f in sorted(a.neg):
            nlinks.append((last_del.get(f, INIT), k, f))
        for f in a.dele:
            if f not in a.add:
                last_del[f] = k
                last_add.pop(f, None)
        for f in a.add:
            last_add[f] = k
            last_del.pop(f, None)
    for f in sorted(gt.goal):
        links.append((last_add[f], GOAL, f))
    adders: dict[int, list[int]] = defaultdict(list)
    deleters: dict[int, list[int]] = defaultdict(list)
    for k, a in enumerate(acts):
        for f in a.add:
            adders[f].append(k)
        for f in a.dele - a.add:
            deleters[f].append(k)
    order: set[tuple[int, int]] = set()

    def protect(p: int, c: int, threats: Iterable[int]):
        if p != INIT and c != GOAL:
            order.add((p, c))
        for d in threats:
            if d in (p, c):
                continue
            cpos = len(acts) if c == GOAL else c
            if d < p:
                order.add((d, p))
            elif d > cpos or (c == GOAL and d >= cpos):
                order.add((c, d))
            else:
                raise AnalysisError("threat inside a causal link of a valid plan")

    for p, c, f in links:
        protect(p, c, deleters[f])
    for p, c, f in nlinks:
        protect(p, c, adders[f])
    return Deordering(
        sorted({CausalLink.make(p, c, gt.facts[f]) for p, c, f in links}),
        sorted(OrderingConstraint(a, b) for a, b in order),
        sorted({CausalLink.make(p, c, gt.facts[f]) for p, c, f in nlinks}),
    )


def linearizations(n: int, orderings: Iterable[OrderingConstraint], cap: Optional[int] = None):
    """All topological orders of steps 0..n-1 (up to ``cap``)."""
    succ: dict[int, set[int]] = defaultdict(set)
    indeg = [0] * n
    for o in orderings:
        if o.before < 0 or o.after < 0:
            continue
        if o.after not in succ[o.before]:
            succ[o.before].add(o.after)
            indeg[o.after] += 1
    out: list[list[int]] = []
    seq: list[int] = []

    def rec():
        if cap is not None and len(out) >= cap:
            return
        if len(seq) == n:
            out.append(list(seq))
            return
        for v in range(n):
            if indeg[v] == 0 and v not in placed:
                placed.add(v)
                seq.append(v)
                for w in succ[v]:
                    indeg[w] -= 1
                rec()
                for w in succ[v]:
                    indeg[w] += 1
                seq.pop()
                placed.discard(v)

    placed: set[int] = set()
    rec()
    return out


def transitive_closure(n: int, edges: Iterable[tuple[int, int]]) -> set[tuple[int, int]]:
    """Closure over steps 0..n-1 (pseudo-steps ignored)."""
    succ: dict[int, set[int]] = defaultdict(set)
    for a, b in edges:
        if a >= 0 and b >= 0:
            succ[a].add(b)
    out = set()
    for s in range(n):
        seen, stack = set(), list(succ[s])
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(succ[v])
        out |= {(s, v) for v in seen}
    return out


def _reduce(n: int, pairs: set[tuple[int, int]]) -> set[tuple[int, int]]:
    """Transitive reduction of an acyclic relation given as its closure."""
    return {(a, b) for a, b in pairs if not any((a, m) in pairs and (m, b) in pairs for m in range(n))}


# ── fabula plans ─────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Role:
    """One actor of a step, the goal it pursues and the effect it commits to."""

    actor: str
    intention: Optional[Atom]
    chosen: Optional[Literal]


@dataclass
class FabulaStep:
    index: int
    action: str
    args: tuple[str, ...]
    roles: tuple[Role, ...] = ()
    pre: tuple[Literal, ...] = ()
    eff: tuple[Literal, ...] = ()
    compiled: Optional[str] = None
    position: Optional[int] = None  # position in the classical plan

    @property
    def actor(self) -> Optional[str]:
        return self.roles[0].actor if self.roles else None

    @property
    def intention(self) -> Optional[Atom]:
        return self.roles[0].intention if self.roles else None

    @property
    def chosen(self) -> Optional[Literal]:
        return self.roles[0].chosen if self.roles else None

    @property
    def is_happening(self) -> bool:
        return not self.roles

    def adds(self) -> set[AnyFact]:
        return {l.atom for l in self.eff if l.positive}

    def __str__(self) -> str:
        return f"({' '.join((self.action,) + self.args)})"


@dataclass
class FrameOfCommitment:
    actor: str
    goal: Atom
    steps: tuple[int, ...]
    motivating_step: int
    final_step: Optional[int]


@dataclass
class FabulaPlan:
    steps: list[FabulaStep]
    causal_links: list[CausalLink] = field(default_factory=list)
    motivational_links: list[MotivationalLink] = field(default_factory=list)
    orderings: list[OrderingConstraint] = field(default_factory=list)
    frames: list[FrameOfCommitment] = field(default_factory=list)
    init: frozenset = frozenset()
    goal: tuple[Atom, ...] = ()
    meta_steps: list[str] = field(default_factory=list)

    def adds_of(self, k: int) -> set:
        if k == INIT:
            return set(self.init)
        return self.steps[k].adds()

    def ordering_closure(self) -> set[tuple[int, int]]:
        edges = [(o.before, o.after) for o in self.orderings]
        edges += [(l.producer, l.consumer) for l in self.causal_links]
        edges += [(l.producer, l.consumer) for l in self.motivational_links]
        return transitive_closure(len(self.steps), edges)

    def pure_orderings(self) -> list[OrderingConstraint]:
        """Ordering constraints not already implied by a direct link."""
        linked = {(l.producer, l.consumer) for l in self.causal_links}
        linked |= {(l.producer, l.consumer) for l in self.motivational_links}
        return [o for o in self.orderings if (o.before, o.after) not in linked]


def ground_source_step(domain: NarrativeDomain, action: str, args: Sequence[str]) -> tuple:
    """(schema, ground preconditions, ground effects) of a source action."""
    try:
        schema = domain.action(action)
    except KeyError:
        raise AnalysisError(f"unknown action {action}") from None
    if len(args) != len(schema.params):
        raise AnalysisError(f"{action} expects {len(schema.params)} arguments, got {len(args)}")
    binding = {v: a for (v, _), a in zip(schema.params, args)}
    pre = tuple(substitute(binding, l) for l in schema.pre)
    eff = tuple(substitute(binding, l) for l in schema.eff)
    return schema, binding, pre, eff


def _source_call(schema: Schema, args: Sequence[str], source: ActionSchema):
    binding = {v: a for (v, _), a in zip(schema.params, args)}
    try:
        return binding, tuple(binding[v] for v, _ in source.params)
    except KeyError as e:
        raise AnalysisError(f"{schema.name}: source parameter {e} not bound") from None


def lift_to_fabula(
    gt: GroundTask,
    plan: Sequence[int],
    metadata: Mapping[str, Union[CompiledSchema, MetaSchema]],
    domain: NarrativeDomain,
    problem: Optional[NarrativeProblem] = None,
) -> FabulaPlan:
    """Read a classical plan of a compiled task back as a story.

    Compiled steps map to their source action with actor(s), intention and
    chosen effect; meta-level steps (intention adoption, settling) go to
    ``meta_steps``.  Links and orderings come from ``deorder``; bookkeeping
    facts (justification, delegation, counters, intends) give orderings but
    no causal links.
    """
    deo = deorder(gt, plan)
    table = FlatteningTable(domain.arities)
    steps: list[FabulaStep] = []
    where: dict[int, int] = {}  # plan position -> fabula index
    meta_steps: list[str] = []
    meta_positions: dict[int, MetaSchema] = {}
    for k, i in enumerate(plan):
        ga = gt.actions[i]
        md = metadata.get(ga.name)
        if md is None:
            raise AnalysisError(f"no metadata for action {ga.name}")
        if isinstance(md, MetaSchema) and md.kind not in (ACTION, HAPPENING):
            meta_steps.append(str(ga))
            meta_positions[k] = md
            continue
        source = domain.action(md.source)
        binding, sargs = _source_call(md.schema, ga.args, source)
        _, _, pre, eff = ground_source_step(domain, source.name, sargs)
        roles: tuple[Role, ...] = ()
        if isinstance(md, CompiledSchema):
            roles = tuple(
                Role(c.actor and binding.get(c.actor, c.actor), substitute(binding, c.intention), substitute(binding, c.chosen))
                for c in md.choices
            )
        elif md.kind == ACTION:
            roles = tuple(
                Role(binding.get(a, a), None, substitute(binding, ch)) for a, ch in zip(md.actors, md.chosen)
            )
        where[k] = len(steps)
        steps.append(FabulaStep(len(steps), source.name, sargs, roles, pre, eff, ga.name, k))

    if meta_positions or any(isinstance(m, MetaSchema) for m in metadata.values()):
        _replay_meta_intentions(gt, plan, metadata, steps, where, problem, table)

    def fmap(k: int) -> Optional[int]:
        if k in (INIT, GOAL):
            return k
        return where.get(k)

    plain = set(domain.predicates)
    links = set()
    for l in deo.links:
        p, c = fmap(l.producer), fmap(l.consumer)
        if p is None or c is None or l.fact.predicate not in plain:
            continue
        links.add(CausalLink.make(p, c, l.fact))
    edges = [(o.before, o.after) for o in deo.orderings]
    closure = transitive_closure(len(plan), edges)
    fab_pairs = {(where[a], where[b]) for a, b in closure if a in where and b in where}
    orderings = sorted(OrderingConstraint(a, b) for a, b in _reduce(len(steps), fab_pairs))
    init = frozenset(problem.init) if problem is not None else frozenset(
        table.unflatten(gt.facts[f]) for f in gt.init if gt.facts[f].predicate in plain or gt.facts[f].predicate.startswith("intends-")
    )
    goal = tuple(problem.outcome) if problem is not None else tuple(
        gt.facts[f] for f in sorted(gt.goal) if gt.facts[f].predicate in plain
    )
    return FabulaPlan(steps, sorted(links), [], orderings, [], init, goal, meta_steps)


def _replay_meta_intentions(gt, plan, metadata, steps, where, problem, table):
    """Attach intentions to meta-planned steps by replaying intends facts.

    An adopted intention inherits the root goal of the intention that
    licensed its adoption; intentions added by story steps or held initially
    are their own roots.  A step's intention is the root of the intention it
    consumes.
    """
    root: dict[ModalAtom, Atom] = {}
    if problem is not None:
        for m in problem.init_intentions:
            root[m] = m.inner
    for k, i in enumerate(plan):
        ga = gt.actions[i]
        md: MetaSchema = metadata[ga.name]
        modal_pre = [table.unflatten(gt.facts[f]) for f in sorted(ga.pre)]
        modal_add = [table.unflatten(gt.facts[f]) for f in sorted(ga.add)]
        held = [m for m in modal_pre if isinstance(m, ModalAtom) and m.modality == INTENDS]
        added = [m for m in modal_add if isinstance(m, ModalAtom) and m.modality == INTENDS]
        if md.kind == PLAN_TO:
            parent = held[0]
            for m in added:
                root[m] = root.get(parent, parent.inner)
            continue
        if k in where:
            step = steps[where[k]]
            roles = []
            for r in step.roles:
                goal = r.chosen.atom.inner if r.chosen.is_intends else r.chosen.atom
                consumed = intends(r.actor, goal)
                roles.append(Role(r.actor, root.get(consumed, goal), r.chosen))
            steps[where[k]] = replace(step, roles=tuple(roles))
            for m in added:
                root[m] = m.inner


# ── frames of commitment ─────────────────────────────────────────────────────


def extract_frames(fp: FabulaPlan) -> FabulaPlan:
    """Group intentional steps into frames and add motivational links."""
    groups: dict[tuple, list[int]] = {}
    order: list[tuple] = []
    for s in fp.steps:
        for r in s.roles:
            if r.intention is None:
                raise AnalysisError(f"step {s.index} {s} has no intention")
            m = intends(r.actor, r.intention)
            mot = None
            for k in range(s.index - 1, -1, -1):
                if m in fp.steps[k].adds():
                    mot = k
                    break
            if mot is None:
                if m in fp.init:
                    mot = INIT
                else:
                    raise NoMotivation(f"no motivating step for {s} ({m})")
            key = (r.actor, r.intention, mot)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(s.index)
    frames: list[FrameOfCommitment] = []
    mlinks: set[MotivationalLink] = set()
    for key in order:
        actor, goal, mot = key
        current: list[int] = []
        chunks: list[list[int]] = []
        for k in groups[key]:
            current.append(k)
            if _achieves(fp.steps[k], actor, goal):
                chunks.append(current)
                current = []
        if current:
            chunks.append(current)
        for chunk in chunks:
            finals = [k for k in chunk if _achieves(fp.steps[k], actor, goal)]
            frames.append(FrameOfCommitment(actor, goal, tuple(chunk), mot, finals[-1] if finals else None))
            for k in chunk:
                mlinks.add(MotivationalLink.make(mot, k, intends(actor, goal)))
    return replace(fp, frames=frames, motivational_links=sorted(mlinks))


def _achieves(step: FabulaStep, actor: str, goal: Atom) -> bool:
    return any(r.actor == actor and r.chosen is not None and r.chosen.positive and r.chosen.atom == goal for r in step.roles)


# ── intentionality ───────────────────────────────────────────────────────────

MEMBERSHIP = "membership"
CONDITIONS = (MEMBERSHIP, "1", "2", "3", "4")


@dataclass(frozen=True)
class Violation:
    condition: str
    frame: Optional[int]
    step: Optional[int]
    message: str

    def __str__(self) -> str:
        label = "membership" if self.condition == MEMBERSHIP else f"condition ({self.condition})"
        return f"{label}: {self.message}"


@dataclass
class IntentionalVerdict:
    valid: bool
    violations: list[Violation]

    def __bool__(self) -> bool:
        return self.valid

    @property
    def conditions(self) -> set[str]:
        return {v.condition for v in self.violations}


def validate_intentional(fp: FabulaPlan) -> IntentionalVerdict:
    """Check that the frames make every intentional step intentional.

    Condition (4) asks for a path of causal or motivational links from every
    non-final frame step to the final step; a mere ordering is not enough.
    A step may belong to several frames.
    """
    n = len(fp.steps)
    out: list[Violation] = []

    def valid_ref(k) -> bool:
        return isinstance(k, int) and 0 <= k < n

    for fi, fr in enumerate(fp.frames):
        refs = list(fr.steps) + ([fr.final_step] if fr.final_step is not None else [])
        bad = [k for k in refs if not valid_ref(k)]
        if bad or not (fr.motivating_step == INIT or valid_ref(fr.motivating_step)):
            raise AnalysisError(f"frame {fi} refers to steps outside the plan")

    for s in fp.steps:
        for r in s.roles:
            if not any(s.index in fr.steps and fr.actor == r.actor for fr in fp.frames):
                out.append(Violation(MEMBERSHIP, None, s.index, f"step {s.index} {s} ({r.actor}) belongs to no frame of {r.actor}"))

    closure = fp.ordering_closure()
    succ: dict[int, set[int]] = defaultdict(set)
    for l in fp.causal_links:
        succ[l.producer].add(l.consumer)
    for l in fp.motivational_links:
        succ[l.producer].add(l.consumer)

    def reaches(a: int, b: int) -> bool:
        seen, stack = set(), [a]
        while stack:
            v = stack.pop()
            if v == b:
                return True
            if v in seen:
                continue
            seen.add(v)
            stack.extend(succ[v])
        return False

    for fi, fr in enumerate(fp.frames):
        goal_m = intends(fr.actor, fr.goal)
        for k in fr.steps:
            if fr.actor not in [r.actor for r in fp.steps[k].roles]:
                out.append(Violation("1", fi, k, f"step {k} {fp.steps[k]} is not performed by {fr.actor}"))
        fin = fr.final_step
        if fin is None or fin not in fr.steps:
            out.append(Violation("2", fi, fin, f"frame {fi} of {fr.actor} for {fr.goal} has no final step"))
        elif fr.goal not in fp.steps[fin].adds():
            out.append(Violation("2", fi, fin, f"final step {fin} {fp.steps[fin]} does not add {fr.goal}"))
        mot = fr.motivating_step
        if goal_m not in fp.adds_of(mot):
            who = "init" if mot == INIT else f"step {mot} {fp.steps[mot]}"
            out.append(Violation("3", fi, mot, f"{who} does not add {goal_m}"))
        for k in fr.steps:
            if MotivationalLink.make(mot, k, goal_m) not in set(fp.motivational_links):
                out.append(Violation("3", fi, k, f"no motivational link for {goal_m} into step {k}"))
            elif mot != INIT and (mot, k) not in closure:
                out.append(Violation("3", fi, k, f"motivating step {mot} does not precede step {k}"))
        if fin is not None and fin in fr.steps:
            for k in fr.steps:
                if k != fin and not reaches(k, fin):
                    out.append(
                        Violation("4", fi, k, f"no causal/motivational path from step {k} {fp.steps[k]} to final step {fin}")
                    )
    return IntentionalVerdict(not out, out)


def validate_fabula_classical(fp: FabulaPlan) -> ClassicalVerdict:
    """Execute the story steps in index order from the initial state."""
    state = set(fp.init)
    for s in fp.steps:
        for l in s.pre:
            if (l.atom in state) != l.positive:
                return ClassicalVerdict(False, s.index, f"step {s.index} {s}: precondition {l} does not hold")
        dels = {l.atom for l in s.eff if not l.positive}
        adds = {l.atom for l in s.eff if l.positive}
        state = (state - dels) | adds
    for g in fp.goal:
        if g not in state:
            return ClassicalVerdict(False, None, f"outcome {g} not achieved")
    return ClassicalVerdict(True)


# ── toggling ─────────────────────────────────────────────────────────────────

TOGGLING, UNKNOWN = "toggling", "unknown"


@dataclass(frozen=True)
class TogglingEntry:
    action: str
    effect: Literal
    status: str


@dataclass
class TogglingReport:
    entries: list[TogglingEntry]

    @property
    def all_toggling(self) -> bool:
        return all(e.status == TOGGLING for e in self.entries)

    def unknown(self) -> list[TogglingEntry]:
        return [e for e in self.entries if e.status != TOGGLING]


def _toggles(pre: Sequence[Literal], e: Literal) -> bool:
    return e.negate() in pre


def check_toggling(source: Union[NarrativeDomain, ClassicalTask]) -> TogglingReport:
    """Per action and effect: does the precondition imply the effect's negation?

    Only direct negation is recognised.  For narrative domains an intends
    effect also counts as toggling when the action is intentional and has no
    other positive effect, since every compiled version of it then delegates
    and requires the delegate not to hold the intention yet.
    """
    out: list[TogglingEntry] = []
    if isinstance(source, NarrativeDomain):
        for a in source.actions:
            positives = [e for e in a.eff if e.positive]
            for e in a.eff:
                ok = _toggles(a.pre, e)
                if not ok and e.is_intends and not a.is_happening and len(positives) == 1:
                    ok = True
                out.append(TogglingEntry(a.name, e, TOGGLING if ok else UNKNOWN))
    else:
        for s in source.schemas:
            for e in s.eff:
                out.append(TogglingEntry(s.name, e, TOGGLING if _toggles(s.pre, e) else UNKNOWN))
    return TogglingReport(out)


def all_linearizations_valid(gt: GroundTask, plan: Sequence[int], cap: Optional[int] = None) -> bool:
    """Check every linearization of ``deorder(gt, plan)``."""
    deo = deorder(gt, plan)
    for lin in linearizations(len(plan), deo.orderings, cap):
        if not validate_classical(gt, [plan[k] for k in lin]).ok:
            return False
    return True


def story_label(gt: GroundTask, metadata: Mapping[str, Union[CompiledSchema, MetaSchema]], domain: NarrativeDomain):
    """Map a ground action id to its ground source action ``(name, *args)``,
    or None for meta-level actions.  Two plans are the same story variation
    when their labels agree as multisets."""

    def label(i: int):
        ga = gt.actions[i]
        md = metadata[ga.name]
        if isinstance(md, MetaSchema) and md.kind not in (ACTION, HAPPENING):
            return None
        source = domain.action(md.source)
        return (source.name,) + _source_call(md.schema, ga.args, source)[1]

    return label


__all__ = [
    "INIT",
    "GOAL",
    "AnalysisError",
    "NoMotivation",
    "ClassicalVerdict",
    "validate_classical",
    "CausalLink",
    "MotivationalLink",
    "OrderingConstraint",
    "Deordering",
    "deorder",
    "linearizations",
    "transitive_closure",
    "Role",
    "FabulaStep",
    "FrameOfCommitment",
    "FabulaPlan",
    "ground_source_step",
    "lift_to_fabula",
    "extract_frames",
    "story_label",
    "Violation",
    "IntentionalVerdict",
    "validate_intentional",
    "validate_fabula_classical",
    "TogglingEntry",
    "TogglingReport",
    "check_toggling",
    "all_linearizations_valid",
    "MEMBERSHIP",
    "CONDITIONS",
]

