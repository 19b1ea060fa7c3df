import pytest

from conftest import load_fixture
from fabula.analysis import extract_frames, lift_to_fabula, validate_classical, validate_fabula_classical
from fabula.cli import death_excusal
from fabula.ground import Unsolvable
from fabula.metaplan import MetaError, build_meta_task, compile_action_meta, count_pred, make_plan_to
from fabula.model import Atom, intends, neg, pos
from fabula.pddl import load_narrative
from fabula.search import bfs_optimal, gbfs, reachable_states, state_facts


def A(pred, *args):
    return Atom(pred, tuple(args))


CHAIN = """(define (domain chain) (:types character)
 (:predicates (p ?x - character) (g ?x - character))
 (:action get-p :parameters (?x - character) :actors (?x) :precondition (not (p ?x)) :effect (p ?x))
 (:action get-g :parameters (?x - character) :actors (?x) :precondition (and (p ?x) (not (g ?x))) :effect (g ?x)))
(define (problem chain-story) (:domain chain) (:objects c - character)
 (:init (intends c (g c))) (:outcome (g c)))"""


# ── per-action compilation ───────────────────────────────────────────────────


def test_slay_one_schema_per_counter_value(aladdin):
    d, _ = aladdin
    out = compile_action_meta(d.action("slay"), pos(A("dead", "?monster")), 3)
    assert [m.name for m in out] == ["slay-k1", "slay-k2", "slay-k3"]
    for k, m in zip((1, 2, 3), out):
        pre = {str(l) for l in m.schema.pre}
        eff = {str(l) for l in m.schema.eff}
        assert "(intends-dead ?knight ?monster)" in pre
        assert f"({count_pred(k)} ?knight)" in pre
        assert "(not (intends-dead ?knight ?monster))" in eff
        assert f"({count_pred(k - 1)} ?knight)" in eff
        assert f"(not ({count_pred(k)} ?knight))" in eff


def test_delegation_counter_cross_product(aladdin):
    d, _ = aladdin
    order = d.action("order-has")
    chosen = [e for e in order.eff if e.is_intends][0]
    out = compile_action_meta(order, chosen, 3)
    # master goes down from 1..3, servant goes up from 0..2
    assert len(out) == 9
    for m in out:
        pre = {str(l) for l in m.schema.pre}
        assert "(not (intends-has ?servant ?who ?what))" in pre
        assert any("count-" in p and "?servant" in p for p in pre)
        assert any("?master" in str(dc) and "?servant" in str(dc) for dc in m.schema.distinct)


def test_happening_without_intentions_copied():
    d, _ = load_narrative(
        """(define (domain d) (:types character) (:predicates (wet ?x - character))
          (:action rain :parameters (?x - character) :precondition (not (wet ?x)) :effect (wet ?x)))
        (define (problem q) (:domain d) (:objects c - character) (:init) (:outcome (wet c)))"""
    )
    rain = d.action("rain")
    (m,) = compile_action_meta(rain, (), 3)
    assert m.name == "rain"
    assert (m.schema.pre, m.schema.eff) == (rain.pre, rain.eff)


def test_happening_with_intention_increments(aladdin):
    d, _ = aladdin
    out = compile_action_meta(d.action("frighten"), (), 2)
    assert len(out) == 2
    assert all("(not (intends-dead ?victim ?monster))" in {str(l) for l in m.schema.pre} for m in out)


def test_wrong_number_of_choices(aladdin):
    d, _ = aladdin
    with pytest.raises(MetaError):
        compile_action_meta(d.action("slay"), (), 3)


# ── plan-to ──────────────────────────────────────────────────────────────────


def test_plan_to_with_already(aladdin):
    d, _ = aladdin
    give = d.action("give")
    has = next(l for l in give.pre if l.atom.predicate == "has")
    at = next(l for l in give.pre if l.atom.predicate == "at" and l.atom.args[0] == give.actors[0])
    chosen = next(e for e in give.eff if e.positive and e.atom.predicate == "has")
    out = make_plan_to(give, chosen, has, [at], 2)
    assert len(out) == 2
    pre = {str(l) for l in out[0].schema.pre}
    assert str(at) in pre
    assert f"(not (intends-has {give.actors[0]} {' '.join(has.atom.args)}))" in pre
    assert {str(l) for l in out[0].schema.eff} >= {f"(intends-has {give.actors[0]} {' '.join(has.atom.args)})"}


def test_plan_to_empty_already_and_depth_bound(aladdin):
    d, _ = aladdin
    slay = d.action("slay")
    at = next(l for l in slay.pre if l.atom.predicate == "at" and l.atom.args[0] == "?knight")
    out = make_plan_to(slay, pos(A("dead", "?monster")), at, (), 4)
    # counters go up from 0..3; nobody adopts a goal at the bound
    assert [m.name.rsplit("-", 1)[1] for m in out] == ["k0", "k1", "k2", "k3"]
    assert not any(f"({count_pred(4)} ?knight)" in {str(l) for l in m.schema.pre} for m in out)
    pre = {str(l) for l in out[0].schema.pre}
    assert pre == {"(intends-dead ?knight ?monster)", "(not (intends-at ?knight ?knight ?where))", "(count-0 ?knight)"}


def test_plan_to_rejects_non_precondition(aladdin):
    d, _ = aladdin
    slay = d.action("slay")
    with pytest.raises(MetaError):
        make_plan_to(slay, pos(A("dead", "?monster")), pos(A("dead", "?monster")), (), 2)
    alive = next(l for l in slay.pre if l.positive)
    with pytest.raises(MetaError):
        make_plan_to(slay, pos(A("dead", "?monster")), neg(alive.atom), (), 2)


# ── whole task ───────────────────────────────────────────────────────────────


def test_depth_must_be_positive(aladdin):
    d, p = aladdin
    with pytest.raises(MetaError):
        build_meta_task(d, p, 0, ground=False)


def test_initial_intentions_exceed_depth():
    d, p = load_narrative(CHAIN.replace("(intends c (g c))", "(intends c (g c)) (intends c (p c))"))
    with pytest.raises(MetaError):
        build_meta_task(d, p, 1, ground=False)


def test_two_step_chain_needs_depth_two():
    d, p = load_narrative(CHAIN)
    with pytest.raises(Unsolvable):
        build_meta_task(d, p, 1)
    mt = build_meta_task(d, p, 2)
    cost, plans = bfs_optimal(mt.ground)
    assert cost == 3
    names = [[mt.ground.actions[i].name for i in plan] for plan in plans]
    assert all(n[0].startswith("plan-to-get-g-p") for n in names)


def test_counters_track_intentions():
    """In every reachable state each character has exactly one counter,
    equal to the number of intentions it holds."""
    d, p = load_fixture("thief")
    mt = build_meta_task(d, p, 3, death_excusal(d))
    gt = mt.ground
    characters = sorted({f.args[0] for f in gt.facts if f.predicate.startswith("count-")})
    assert characters
    for s in reachable_states(gt):
        facts = [gt.facts[i] for i in state_facts(s)]
        for c in characters:
            counts = [int(f.predicate[6:]) for f in facts if f.predicate.startswith("count-") and f.args[0] == c]
            held = sum(1 for f in facts if f.predicate.startswith("intends-") and f.args[0] == c)
            assert len(counts) == 1 and counts[0] == held, (c, [str(f) for f in facts])


def test_meta_aladdin_depth_four():
    d, p = load_fixture("aladdin")
    mt = build_meta_task(d, p, 4, death_excusal(d))
    res = gbfs(mt.ground)
    assert res.solved
    assert validate_classical(mt.ground, res.plan).ok
    fp = extract_frames(lift_to_fabula(mt.ground, res.plan, mt.metadata, d, p))
    assert validate_fabula_classical(fp).ok
    assert fp.meta_steps
    final = set(mt.ground.init)
    for i in res.plan:
        a = mt.ground.actions[i]
        final = (final - a.dele) | a.add
    for f in final:
        atom = mt.ground.facts[f]
        if atom.predicate.startswith("count-") and atom.args[0] not in mt.excused_characters:
            assert atom.predicate == count_pred(0)
