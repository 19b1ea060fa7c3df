import itertools

import pytest

from conftest import GOLDEN
from fabula.analysis import check_toggling, extract_frames, lift_to_fabula, validate_intentional
from fabula.ground import ground_task
from fabula.justify import (
    CompileError,
    CompileOptions,
    build_compiled_task,
    compile_happening,
    compile_intentional_action,
    compile_schemas,
    make_toggling,
    relevant_effects,
)
from fabula.model import Atom, neg, pos
from fabula.pddl import canonical_schema, load_narrative, parse_narrative_domain
from fabula.search import astar
from fabula.tasks import ActionSchema

GOLDEN_NAMES = ("slay-1-because-intends-dead", "slay-2-because-intends-dead", "slay-because-intends-has")


def A(pred, *args):
    return Atom(pred, tuple(args))


@pytest.fixture(scope="module")
def compiled_schemas(aladdin):
    d, p = aladdin
    return {c.name: c for c in compile_schemas(d, p)}


@pytest.mark.parametrize("name", GOLDEN_NAMES)
def test_golden_slay_listing(compiled_schemas, name):
    expected = (GOLDEN / f"{name}.txt").read_text()
    assert canonical_schema(compiled_schemas[name].schema) == expected


def test_slay_alive_preconditions_not_justified(compiled_schemas):
    for name in GOLDEN_NAMES:
        eff = [str(l) for l in compiled_schemas[name].schema.eff]
        assert not any("justified-alive" in e for e in eff)


# ── relevant effects ─────────────────────────────────────────────────────────


def test_relevant_effects_slay(aladdin):
    d, p = aladdin
    assert relevant_effects(d.action("slay"), p.outcome, d) == [pos(A("dead", "?monster"))]


def test_relevant_effects_fall_in_love(aladdin):
    d, p = aladdin
    rel = relevant_effects(d.action("fall-in-love"), p.outcome, d)
    assert [str(e) for e in rel] == ["(loves ?man ?woman)", "(intends ?man (married ?man ?woman))"]


def test_irrelevant_effect_filtered():
    d = parse_narrative_domain(
        """(define (domain d) (:types character) (:predicates (p ?x - character) (q ?x - character))
          (:action a :parameters (?x - character) :actors (?x) :precondition (p ?x) :effect (q ?x)))"""
    )
    assert relevant_effects(d.action("a"), [A("p", "c")], d) == []


# ── per-action compilation ───────────────────────────────────────────────────


def test_slay_dead_intention_gives_equal_and_distinct_variants(aladdin):
    d, p = aladdin
    out = compile_intentional_action(d.action("slay"), [("dead", pos(A("dead", "?monster")))], d, p.outcome)
    assert [c.name for c in out] == ["slay-1-because-intends-dead", "slay-2-because-intends-dead"]
    assert [c.choices[0].branch for c in out] == ["equal", "distinct"]


def test_not_relevant_choice_rejected(aladdin):
    d, p = aladdin
    with pytest.raises(CompileError):
        compile_intentional_action(d.action("slay"), [("dead", neg(A("alive", "?monster")))], d, p.outcome)


def test_delegating_choice(aladdin):
    d, p = aladdin
    order = d.action("order-has")
    chosen = [e for e in order.eff if e.is_intends][0]
    (c,) = compile_intentional_action(order, [("married", chosen)], d, p.outcome)
    pre = {str(l) for l in c.schema.pre}
    eff = {str(l) for l in c.schema.eff}
    # (4): the delegate does not already hold the intention
    assert "(not (intends-has ?servant ?who ?what))" in pre
    # the delegated goal is still open
    assert "(not (has ?who ?what))" in pre
    # (3a): nobody holds the delegation yet
    assert any("delegated-has ?c ?who ?what" in str(f) and "=" not in str(f) for f in c.schema.forbid)
    assert "(delegated-has ?servant ?who ?what)" in eff
    assert any(e.startswith("(not (justified-has-married ?who ?what") for e in eff)


def test_secondary_delegation_flag(aladdin):
    d, p = aladdin
    order = d.action("order-has")
    chosen = [e for e in order.eff if e.is_intends][0]
    (c,) = compile_intentional_action(
        order, [("has", chosen)], d, p.outcome, CompileOptions(secondary_delegation=True)
    )
    forbid = [str(f) for f in c.schema.forbid if "delegated-has ?c ?who ?what" in str(f)]
    assert forbid and all("(not (= ?c ?master))" in f for f in forbid)
    assert "(not (delegated-has ?master ?who ?what))" in {str(l) for l in c.schema.eff}


def test_multi_actor_cartesian_product(compiled_schemas):
    marry = [n for n in compiled_schemas if n.startswith("marry-")]
    assert marry
    assert all(len(compiled_schemas[n].choices) == 2 for n in marry)
    actors = {tuple(ch.actor for ch in compiled_schemas[n].choices) for n in marry}
    assert actors == {("?groom", "?bride")}


# ── happenings ───────────────────────────────────────────────────────────────


def test_compile_happening_fall_in_love(aladdin):
    d, _ = aladdin
    c = compile_happening(d.action("fall-in-love"))
    assert c.name == "fall-in-love"
    assert {str(l) for l in c.schema.eff} == {"(loves ?man ?woman)", "(intends-married ?man ?man ?woman)"}
    assert c.schema.pre == d.action("fall-in-love").pre


def test_compile_happening_frighten_no_bookkeeping(aladdin):
    d, _ = aladdin
    c = compile_happening(d.action("frighten"))
    assert [str(l) for l in c.schema.eff] == ["(intends-dead ?victim ?monster)"]


def test_compile_plain_happening_unchanged():
    d = parse_narrative_domain(
        """(define (domain d) (:types character) (:predicates (p ?x - character))
          (:action h :parameters (?x - character) :precondition (not (p ?x)) :effect (p ?x)))"""
    )
    h = d.action("h")
    c = compile_happening(h)
    assert (c.schema.name, c.schema.params, c.schema.pre, c.schema.eff) == (h.name, h.params, h.pre, h.eff)


# ── toggling ─────────────────────────────────────────────────────────────────


def _schema(pre, eff):
    return ActionSchema("act", (("?x", "character"),), ("?x",), tuple(pre), tuple(eff))


def test_make_toggling_counts():
    p, q = A("p", "?x"), A("q", "?x")
    assert len(make_toggling(_schema([], [pos(p)]))) == 2
    assert len(make_toggling(_schema([], [pos(p), neg(q)]))) == 4
    already = _schema([neg(p)], [pos(p)])
    assert make_toggling(already) == [already]


def test_make_toggling_slay(aladdin):
    d, _ = aladdin
    variants = make_toggling(d.action("slay"))
    # (not (alive ?monster)) already toggles; (dead ?monster) is split
    assert len(variants) == 2
    pres = [set(v.pre) for v in variants]
    assert any(neg(A("dead", "?monster")) in pr for pr in pres)


def test_make_toggling_outputs_are_toggling():
    p, q = A("p", "?x"), A("q", "?x")
    for v in make_toggling(_schema([pos(q)], [pos(p), neg(q)])):
        for e in v.eff:
            assert e.negate() in v.pre


# ── whole task ───────────────────────────────────────────────────────────────


def test_pruning_removes_useless_instances(aladdin_compiled):
    names = {a.name for a in aladdin_compiled.ground.actions}
    assert "pillage-because-intends-dead" not in names
    assert not any(n.startswith("order-has-because-intends-has") for n in names)
    assert not any(n.startswith("order-has-because-intends-dead") for n in names)


def test_compile_phase_timing_recorded(aladdin_compiled):
    secs = aladdin_compiled.stats["seconds"]
    assert set(secs) == {"compile", "ground", "prune"}
    assert aladdin_compiled.stats["pruned_actions"] > 0


def test_admissible_justified_facts_are_deletable(aladdin_compiled):
    gt = aladdin_compiled.ground
    deleted = set()
    for a in gt.actions:
        deleted |= a.dele
    for f in gt.bookkeeping:
        assert f in deleted, gt.facts[f]
        assert f in gt.init and f in gt.goal


def test_no_intentional_actions_gives_flattened_task():
    d, p = load_narrative(
        """(define (domain d) (:types character) (:predicates (p ?x - character))
          (:action h :parameters (?x - character) :precondition (not (p ?x)) :effect (p ?x)))""",
        """(define (problem q) (:domain d) (:objects c - character) (:init) (:outcome (p c)))""",
    )
    ct = build_compiled_task(d, p)
    assert [s.name for s in ct.task.schemas] == ["h"]
    assert ct.admissible == frozenset()
    assert ct.task.bookkeeping == frozenset()
    assert astar(ct.ground).cost == 1


def test_branch_exclusivity(aladdin):
    """Equal and distinct variants split the ground instances of the
    unsplit action between them, without overlap."""
    d, p = aladdin
    out = compile_intentional_action(d.action("slay"), [("dead", pos(A("dead", "?monster")))], d, p.outcome)
    ct = build_compiled_task(d, p, ground=False)
    task = ct.task
    sub = type(task)(task.name, task.types, task.predicates, task.objects, tuple(c.schema for c in out), task.init, task.goal)
    gt = ground_task(sub, static_filter=False)
    equal, distinct = set(), set()
    for a in gt.actions:
        if a.name == "slay-1-because-intends-dead":
            k, m, w = a.args
            equal.add((k, m, w, m))
        else:
            distinct.add(a.args)
    assert equal and distinct
    assert not (equal & distinct)
    objs = task.objects
    types = task.types

    def of(t):
        return sorted(o for o, ot in objs.items() if types.is_subtype(ot, t))

    unsplit = set(itertools.product(of("knight"), of("monster"), of("place"), of("character")))
    assert equal | distinct == unsplit


def test_toggling_micro_plans_are_intentional():
    """Smoke version of the property suite on one small delegation domain."""
    text = """(define (domain errand) (:types character)
      (:predicates (p ?x - character) (q ?x - character))
      (:action ask :parameters (?a - character ?b - character) :actors (?a)
        :precondition (not (= ?a ?b)) :effect (intends ?b (q ?b)))
      (:action do-q :parameters (?b - character) :actors (?b)
        :precondition (not (q ?b)) :effect (q ?b))
      (:action do-p :parameters (?a - character ?b - character) :actors (?a)
        :precondition (and (q ?b) (not (p ?a)) (not (= ?a ?b))) :effect (p ?a)))
    (define (problem e) (:domain errand) (:objects x y - character)
      (:init (intends x (p x))) (:outcome (and (p x))))"""
    d, p = load_narrative(text)
    assert check_toggling(d).all_toggling
    ct = build_compiled_task(d, p)
    res = astar(ct.ground)
    assert res.cost == 3
    fp = extract_frames(lift_to_fabula(ct.ground, res.plan, ct.metadata, d, p))
    assert [s.action for s in fp.steps] == ["ask", "do-q", "do-p"]
    assert validate_intentional(fp).valid
