"""Grounding of classical tasks and "possible and relevant" pruning.

Facts and actions are numbered deterministically: facts sorted by
(predicate, args), actions by (schema name, args).
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .model import Atom, is_var
from .tasks import ClassicalTask, Schema

DEFAULT_MEM_LIMIT = 2 * 1024**3
_BYTES_PER_ACTION = 600


class GroundingError(Exception):
    pass


class Unsolvable(Exception):
    pass


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    pre: frozenset[int]
    neg: frozenset[int]
    add: frozenset[int]
    dele: frozenset[int]

    @property
    def label(self) -> str:
        return "_".join((self.name,) + self.args)

    def __str__(self) -> str:
        return f"({self.name}{''.join(' ' + a for a in self.args)})"


@dataclass
class GroundTask:
    facts: list[Atom]
    actions: list[GroundAction]
    init: frozenset[int]
    goal: frozenset[int]
    bookkeeping: frozenset[int] = frozenset()
    index: dict[Atom, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.index:
            self.index = {f: i for i, f in enumerate(self.facts)}

    def fact_id(self, atom: Atom) -> int:
        return self.index[atom]

    def find_action(self, name: str, args: Iterable[str]) -> int:
        args = tuple(args)
        for i, a in enumerate(self.actions):
            if a.name == name and a.args == args:
                return i
        raise KeyError(f"({name} {' '.join(args)})")

    def stats(self) -> dict:
        return {"facts": len(self.facts), "actions": len(self.actions)}


def stats_json(before: GroundTask, after: GroundTask) -> str:
    return json.dumps(
        {
            "facts": len(before.facts),
            "actions": len(before.actions),
            "pruned_facts": len(before.facts) - len(after.facts),
            "pruned_actions": len(before.actions) - len(after.actions),
        },
        sort_keys=True,
    )


def _rebuild(
    facts_used: Iterable[Atom],
    actions: Iterable[tuple[str, tuple, Iterable[Atom], Iterable[Atom], Iterable[Atom], Iterable[Atom]]],
    init: Iterable[Atom],
    goal: Iterable[Atom],
    bookkeeping: Iterable[Atom],
) -> GroundTask:
    """Build a GroundTask with canonical numbering from atom-level data."""
    facts = sorted(set(facts_used))
    index = {f: i for i, f in enumerate(facts)}

    def ids(atoms):
        return frozenset(index[a] for a in atoms)

    acts = []
    for name, args, pre, negs, add, dele in actions:
        add_ids = ids(add)
        acts.append(GroundAction(name, args, ids(pre), ids(negs), add_ids, ids(dele) - add_ids))
    acts.sort(key=lambda a: (a.name, a.args))
    return GroundTask(
        facts,
        acts,
        frozenset(index[a] for a in init if a in index),
        ids(goal),
        frozenset(index[a] for a in bookkeeping if a in index),
        index,
    )


def ground_task(
    task: ClassicalTask,
    objects: Optional[dict[str, str]] = None,
    mem_limit: int = DEFAULT_MEM_LIMIT,
    static_filter: bool = True,
) -> GroundTask:
    """Enumerate all type-consistent instantiations of the task's schemas.

    Parameter constraints are enforced here and negated existentials are
    expanded into ground negative literals.  With ``static_filter`` instances
    whose static preconditions (predicates no schema changes) fail in the
    initial state are skipped, and satisfied static conditions are dropped.
    """
    objects = dict(task.objects if objects is None else objects)
    by_type: dict[str, list[str]] = defaultdict(list)
    for obj, t in sorted(objects.items()):
        for anc in task.types.ancestors(t):
            by_type[anc].append(obj)
    fluent = {l.atom.predicate for s in task.schemas for l in s.eff}
    init = set(task.init)
    budget = max(1, mem_limit // _BYTES_PER_ACTION)

    used: set[Atom] = set(init) | set(task.goal)
    raw_actions = []
    for schema in task.schemas:
        for binding in _bindings(schema, by_type, fluent if static_filter else None, init):
            inst = _instantiate(schema, binding, by_type, fluent if static_filter else None, init)
            if inst is None:
                continue
            raw_actions.append(inst)
            for part in inst[2:]:
                used.update(part)
            if len(raw_actions) > budget:
                raise GroundingError(
                    f"grounding exceeds memory budget ({mem_limit} bytes): "
                    f">{budget} ground actions so far, schema {schema.name}"
                )
    bookkeeping = {a for a in used if a.predicate in task.bookkeeping}
    return _rebuild(used, raw_actions, init, task.goal, bookkeeping)


def _bindings(schema: Schema, by_type, fluent, init):
    params = schema.params
    var_index = {v: i for i, (v, _) in enumerate(params)}
    # checks that become decidable once parameter i is bound
    checks: list[list] = [[] for _ in range(max(1, len(params)))]

    def last_var(terms) -> int:
        idx = [var_index[t] for t in terms if is_var(t) and t in var_index]
        return max(idx) if idx else -1

    for d in schema.distinct:
        checks[max(0, last_var([t for pair in d.pairs for t in pair]))].append(("distinct", d))
    if fluent is not None:
        for lit in schema.pre:
            if lit.atom.predicate not in fluent:
                checks[max(0, last_var(lit.atom.args))].append(("static", lit))
    binding: dict[str, str] = {}

    def ok(i: int) -> bool:
        for kind, c in checks[i]:
            if kind == "distinct":
                if not c.holds(binding):
                    return False
            else:
                ground = Atom(c.atom.predicate, tuple(binding.get(a, a) for a in c.atom.args))
                if (ground in init) != c.positive:
                    return False
        return True

    def rec(i: int):
        if i == len(params):
            yield dict(binding)
            return
        var, vtype = params[i]
        for obj in by_type.get(vtype, ()):
            binding[var] = obj
            if ok(i):
                yield from rec(i + 1)
        binding.pop(var, None)

    if not params:
        if ok(0):
            yield {}
        return
    yield from rec(0)


def _instantiate(schema: Schema, binding, by_type, fluent, init):
    def g(atom: Atom) -> Atom:
        return Atom(atom.predicate, tuple(binding.get(a, a) for a in atom.args))

    pre, negs = [], []
    for lit in schema.pre:
        atom = g(lit.atom)
        if fluent is not None and lit.atom.predicate not in fluent:
            if (atom in init) != lit.positive:
                return None
            continue
        (pre if lit.positive else negs).append(atom)
    for ne in schema.forbid:
        excluded = {binding.get(x, x) for x in ne.exclude}
        for w in by_type.get(ne.vtype, ()):
            if w in excluded:
                continue
            atom = Atom(ne.atom.predicate, tuple(w if a == ne.var else binding.get(a, a) for a in ne.atom.args))
            negs.append(atom)
    if set(pre) & set(negs):
        return None
    add = [g(l.atom) for l in schema.eff if l.positive]
    dele = [g(l.atom) for l in schema.eff if not l.positive]
    args = tuple(binding[v] for v, _ in schema.params)
    return (schema.name, args, pre, negs, add, dele)


# ── reachability and relevance ───────────────────────────────────────────────


def relaxed_reachability(gt: GroundTask, actions: Optional[Iterable[int]] = None) -> tuple[set[int], set[int]]:
    """Delete-relaxed forward fixpoint from the initial state.

    A negative precondition counts as satisfiable unless its fact is initially
    true and no reachable action deletes it.
    """
    candidates = range(len(gt.actions)) if actions is None else sorted(actions)
    reached = set(gt.init)
    deletable: set[int] = set()
    missing: dict[int, int] = {}
    waiting_pos: dict[int, list[int]] = defaultdict(list)
    waiting_neg: dict[int, list[int]] = defaultdict(list)
    queue: deque[int] = deque()
    for i in candidates:
        a = gt.actions[i]
        n = 0
        for f in a.pre:
            if f not in reached:
                waiting_pos[f].append(i)
                n += 1
        for f in a.neg:
            if f in gt.init:
                waiting_neg[f].append(i)
                n += 1
        missing[i] = n
        if n == 0:
            queue.append(i)
    applicable: set[int] = set()
    while queue:
        i = queue.popleft()
        if i in applicable:
            continue
        applicable.add(i)
        a = gt.actions[i]
        for f in a.add:
            if f not in reached:
                reached.add(f)
                for j in waiting_pos.pop(f, ()):
                    missing[j] -= 1
                    if missing[j] == 0:
                        queue.append(j)
        for f in a.dele:
            if f not in deletable:
                deletable.add(f)
                for j in waiting_neg.pop(f, ()):
                    missing[j] -= 1
                    if missing[j] == 0:
                        queue.append(j)
    return reached, applicable


def backward_relevance(gt: GroundTask, actions: Optional[Iterable[int]] = None) -> tuple[set[int], set[int]]:
    """Backward fixpoint from the goal.

    An action is relevant if it adds a relevant fact or deletes a fact that
    some relevant action needs to be false; its preconditions then become
    relevant.  Returns (relevant facts, relevant actions).
    """
    candidates = list(range(len(gt.actions))) if actions is None else sorted(actions)
    adders: dict[int, list[int]] = defaultdict(list)
    deleters: dict[int, list[int]] = defaultdict(list)
    for i in candidates:
        for f in gt.actions[i].add:
            adders[f].append(i)
        for f in gt.actions[i].dele:
            deleters[f].append(i)
    rel_pos = set(gt.goal)
    rel_neg: set[int] = set()
    queue = deque(("+", f) for f in sorted(gt.goal))
    relevant: set[int] = set()
    while queue:
        sign, f = queue.popleft()
        for i in adders[f] if sign == "+" else deleters[f]:
            if i in relevant:
                continue
            relevant.add(i)
            a = gt.actions[i]
            for p in a.pre:
                if p not in rel_pos:
                    rel_pos.add(p)
                    queue.append(("+", p))
            for p in a.neg:
                if p not in rel_neg:
                    rel_neg.add(p)
                    queue.append(("-", p))
    return rel_pos | rel_neg, relevant


def dischargeable(gt: GroundTask, actions: Optional[Iterable[int]] = None) -> set[int]:
    """Least set of actions whose deleted goal facts can be re-added later.

    The last step of a valid plan deletes no goal fact that it does not also
    add; by induction every step of a valid plan belongs to this set.  For
    compiled narrative tasks this is the justification back-chaining: a step
    that makes a chosen effect unjustified is kept only if some usable step
    of the same frame consumes it.
    """
    candidates = list(range(len(gt.actions))) if actions is None else sorted(actions)
    owed: dict[int, int] = {}
    waiting: dict[int, list[int]] = defaultdict(list)
    queue: deque[int] = deque()
    for i in candidates:
        debts = gt.actions[i].dele & gt.goal
        owed[i] = len(debts)
        for f in debts:
            waiting[f].append(i)
        if not debts:
            queue.append(i)
    repaired: set[int] = set()
    usable: set[int] = set()
    while queue:
        i = queue.popleft()
        if i in usable:
            continue
        usable.add(i)
        for f in gt.actions[i].add:
            if f in repaired:
                continue
            repaired.add(f)
            for j in waiting.pop(f, ()):
                owed[j] -= 1
                if owed[j] == 0:
                    queue.append(j)
    return usable


def prune_fixpoint(gt: GroundTask) -> GroundTask:
    """Alternate reachability, discharge and relevance pruning to a fixpoint.

    Bookkeeping (justification) facts are re-derived on every round: those
    deleted by some remaining action hold initially and are goals, the rest
    are dropped.  Raises Unsolvable when a goal is relaxed-unreachable.
    """
    keep = set(range(len(gt.actions)))
    bookkeeping = set(gt.bookkeeping)
    base_init = set(gt.init) - bookkeeping
    base_goal = set(gt.goal) - bookkeeping
    current = gt
    while True:
        reached, applicable = relaxed_reachability(_restrict(current, keep, base_init, base_goal, bookkeeping), keep)
        missing = base_goal - reached
        if missing:
            names = ", ".join(str(current.facts[f]) for f in sorted(missing)[:5])
            raise Unsolvable(f"goal facts relaxed-unreachable: {names}")
        step = keep & applicable
        view = _restrict(current, step, base_init, base_goal, bookkeeping)
        step &= dischargeable(view, step)
        view = _restrict(current, step, base_init, base_goal, bookkeeping)
        _, relevant = backward_relevance(view, step)
        step &= relevant
        if step == keep:
            break
        keep = step
    final = _restrict(current, keep, base_init, base_goal, bookkeeping)
    reached, _ = relaxed_reachability(final, keep)
    return _compact(final, keep, reached)


def _restrict(gt: GroundTask, keep: set[int], base_init, base_goal, bookkeeping) -> GroundTask:
    """Same fact table, with init/goal recomputed for the kept actions."""
    live_bk = set()
    for i in keep:
        live_bk |= gt.actions[i].dele & bookkeeping
    return GroundTask(
        gt.facts,
        gt.actions,
        frozenset(base_init | live_bk),
        frozenset(base_goal | live_bk),
        frozenset(bookkeeping),
        gt.index,
    )


def _compact(gt: GroundTask, keep: set[int], reached: set[int]) -> GroundTask:
    """Renumber, dropping facts no kept action or goal mentions."""
    mentioned: set[int] = set(gt.goal)
    rows = []
    for i in sorted(keep):
        a = gt.actions[i]
        neg = {f for f in a.neg if f in gt.init or f in reached}
        add = {f for f in a.add if f not in gt.bookkeeping or f in gt.goal}
        mentioned |= a.pre | neg | add | a.dele
        rows.append((a.name, a.args, a.pre, neg, add, a.dele))
    F = gt.facts
    actions = [
        (n, args, [F[f] for f in pre], [F[f] for f in neg], [F[f] for f in add], [F[f] for f in dele])
        for n, args, pre, neg, add, dele in rows
    ]
    return _rebuild(
        [F[f] for f in mentioned],
        actions,
        [F[f] for f in gt.init if f in mentioned],
        [F[f] for f in gt.goal],
        [F[f] for f in gt.bookkeeping if f in mentioned],
    )

