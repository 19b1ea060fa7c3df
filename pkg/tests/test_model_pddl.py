import pytest

from fabula.ground import ground_task, relaxed_reachability
from fabula.justify import build_compiled_task
from fabula.model import Atom, flatten_modal, intends, justified, neg, pos, substitute, unify
from fabula.pddl import (
    GROUND_STRIPS,
    LIFTED_ADL,
    ParseError,
    WellFormednessError,
    emit_classical_pddl,
    load_narrative,
    parse_classical,
    parse_narrative_domain,
)
from fabula.tasks import ClassicalTask, check_wellformed

SLAY = """
(define (domain slayers)
  (:types character place - object knight monster - character)
  (:predicates (alive ?x - character) (dead ?x - character) (at ?x - character ?p - place))
  (:action slay
   :parameters (?knight - knight ?monster - monster ?where - place)
   :actors (?knight)
   :precondition (and (alive ?knight) (at ?knight ?where) (alive ?monster) (at ?monster ?where))
   :effect (and (not (alive ?monster)) (dead ?monster))))
"""


def A(pred, *args):
    return Atom(pred, tuple(args))


# ── unification and substitution ─────────────────────────────────────────────


def test_unify_variable_variable():
    assert unify(A("dead", "?who"), A("dead", "?monster")) in ({"?who": "?monster"}, {"?monster": "?who"})


def test_unify_predicate_mismatch():
    assert unify(A("has", "?who", "?what"), A("dead", "?x")) is None


def test_unify_constant():
    assert unify(A("married", "jafar", "?w"), A("married", "jafar", "jasmine")) == {"?w": "jasmine"}


def test_substitute():
    assert substitute({"?who": "genie"}, pos(A("dead", "?who"))) == pos(A("dead", "genie"))
    lit = neg(A("at", "?x", "?y"))
    assert substitute({}, lit) == lit
    m = intends("?a", A("has", "jafar", "lamp"))
    assert substitute({"?a": "aladdin"}, pos(m)) == pos(intends("aladdin", A("has", "jafar", "lamp")))


def test_flatten_modal():
    m = intends("aladdin", A("has", "jafar", "lamp"))
    assert str(flatten_modal(pos(m))) == "(intends-has aladdin jafar lamp)"
    j = justified(A("at", "aladdin", "mountain"), m)
    assert str(flatten_modal(pos(j))) == "(justified-at-has aladdin mountain aladdin jafar lamp)"
    plain = pos(A("at", "aladdin", "castle"))
    assert flatten_modal(plain) == plain


# ── well-formedness ──────────────────────────────────────────────────────────


def test_fixture_is_wellformed(aladdin):
    d, p = aladdin
    assert check_wellformed(d, p) == []


def test_actor_must_be_parameter():
    text = SLAY.replace(":actors (?knight)", ":actors (?ghost)")
    with pytest.raises(WellFormednessError) as e:
        parse_narrative_domain(text)
    assert any(d.category == "actor not a parameter" for d in e.value.diagnostics)


def test_reserved_modality_in_init():
    problem = """(define (problem p) (:domain slayers) (:objects k - knight m - monster c - place)
      (:init (justified (dead m) (intends k (dead m)))) (:outcome (dead m)))"""
    with pytest.raises(WellFormednessError) as e:
        load_narrative(SLAY, problem)
    assert any(d.category == "reserved modality in input" for d in e.value.diagnostics)


# ── parsing ──────────────────────────────────────────────────────────────────


def test_parse_slay():
    d = parse_narrative_domain(SLAY)
    slay = d.action("slay")
    assert slay.actors == ("?knight",)
    assert set(slay.pre) == {
        pos(A("alive", "?knight")),
        pos(A("at", "?knight", "?where")),
        pos(A("alive", "?monster")),
        pos(A("at", "?monster", "?where")),
    }
    assert set(slay.eff) == {neg(A("alive", "?monster")), pos(A("dead", "?monster"))}


def test_empty_action_body_is_syntax_error():
    text = SLAY.replace(
        """   :parameters (?knight - knight ?monster - monster ?where - place)
   :actors (?knight)
   :precondition (and (alive ?knight) (at ?knight ?where) (alive ?monster) (at ?monster ?where))
   :effect (and (not (alive ?monster)) (dead ?monster))""",
        "",
    )
    with pytest.raises(ParseError):
        parse_narrative_domain(text)


def test_unbalanced_parentheses():
    with pytest.raises(ParseError) as e:
        parse_narrative_domain(SLAY + ")")
    assert "line" in str(e.value)


def test_happening_with_modal_effect(aladdin):
    d, _ = aladdin
    fil = d.action("fall-in-love")
    assert fil.actors == () and fil.is_happening
    modal = [e for e in fil.eff if e.is_intends]
    assert [str(e) for e in modal] == ["(intends ?man (married ?man ?woman))"]


def test_problem_outcome(aladdin):
    _, p = aladdin
    assert set(map(str, p.outcome)) == {"(married jafar jasmine)", "(dead genie)"}


def test_empty_outcome_rejected():
    problem = """(define (problem p) (:domain slayers) (:objects k - knight m - monster c - place)
      (:init (alive k)) (:outcome (and)))"""
    with pytest.raises(WellFormednessError) as e:
        load_narrative(SLAY, problem)
    assert any(d.category == "outcome non-empty" for d in e.value.diagnostics)


def test_initial_intention_accepted():
    problem = """(define (problem p) (:domain slayers) (:objects k - knight m - monster c - place)
      (:init (alive k) (alive m) (at k c) (at m c) (intends k (dead m))) (:outcome (dead m)))"""
    _, p = load_narrative(SLAY, problem)
    assert [str(m) for m in p.init_intentions] == ["(intends k (dead m))"]


# ── emission ─────────────────────────────────────────────────────────────────


def test_emit_lifted_contains_compiled_slay(aladdin_compiled):
    text = emit_classical_pddl(aladdin_compiled.task, LIFTED_ADL)
    assert "(:action slay-1-because-intends-dead" in text.domain
    again = parse_classical(text.domain, text.problem)
    assert {s.name for s in again.schemas} == {s.name for s in aladdin_compiled.task.schemas}


def test_emit_empty_task():
    from fabula.model import TypeTree

    task = ClassicalTask("empty", TypeTree(), {"p": ()}, {}, (), frozenset(), (A("p"),))
    text = emit_classical_pddl(task, LIFTED_ADL)
    again = parse_classical(text.domain, text.problem)
    assert again.schemas == ()


def test_ground_strips_round_trip_same_reachable_facts(aladdin_compiled):
    ct = aladdin_compiled
    text = emit_classical_pddl(ct.task, GROUND_STRIPS, ground=ct.ground)
    reparsed = parse_classical(text.domain, text.problem)
    g2 = ground_task(reparsed)
    lifted = ground_task(ct.task)
    f1, _ = relaxed_reachability(lifted)
    f2, _ = relaxed_reachability(g2)
    reach_lifted = {lifted.facts[i] for i in f1}
    reach_ground = {g2.facts[i] for i in f2}
    # the ground emission contains the pruned task, so it reaches a subset
    assert reach_ground <= reach_lifted
    # and re-emitting the re-parsed ground task is a fixpoint
    again = emit_classical_pddl(reparsed, GROUND_STRIPS, ground=g2)
    g3 = ground_task(parse_classical(again.domain, again.problem))
    assert {g3.facts[i] for i in relaxed_reachability(g3)[0]} == reach_ground


def test_ground_strips_round_trip_unpruned_identical():
    """Without pruning, the ground emission reaches exactly the lifted facts."""
    d, p = load_narrative(
        SLAY,
        """(define (problem p) (:domain slayers) (:objects k - knight m1 m2 - monster c - place)
          (:init (alive k) (alive m1) (alive m2) (at k c) (at m1 c) (at m2 c) (intends k (dead m1)))
          (:outcome (dead m1)))""",
    )
    ct = build_compiled_task(d, p, ground=False)
    lifted = ground_task(ct.task)
    text = emit_classical_pddl(ct.task, GROUND_STRIPS, ground=lifted)
    g2 = ground_task(parse_classical(text.domain, text.problem))
    r1 = {lifted.facts[i] for i in relaxed_reachability(lifted)[0]}
    r2 = {g2.facts[i] for i in relaxed_reachability(g2)[0]}
    assert r1 == r2
