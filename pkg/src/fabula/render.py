"""Plan JSON serialization and Graphviz DOT rendering of fabula plans."""

from __future__ import annotations

import json
from typing import Optional

from .analysis import (
    CausalLink,
    FabulaPlan,
    FabulaStep,
    FrameOfCommitment,
    MotivationalLink,
    OrderingConstraint,
    Role,
    ground_source_step,
)
from .model import Atom, Literal, ModalAtom
from .pddl import ParseError, _literal, _modal_or_atom, read_sexprs
from .tasks import NarrativeDomain, NarrativeProblem


class PlanFormatError(Exception):
    pass


def _parse_one(text: str, what: str):
    try:
        forms = read_sexprs(text)
    except ParseError as e:
        raise PlanFormatError(f"bad {what} {text!r}: {e}") from None
    if len(forms) != 1:
        raise PlanFormatError(f"bad {what} {text!r}")
    return forms[0]


def parse_fact(text: str):
    """``"(at jafar castle)"`` or ``"(intends genie (loves jasmine jafar))"``."""
    try:
        return _modal_or_atom(_parse_one(text, "fact"))
    except ParseError as e:
        raise PlanFormatError(f"bad fact {text!r}: {e}") from None


def parse_literal(text: str) -> Literal:
    try:
        return _literal(_parse_one(text, "literal"))
    except ParseError as e:
        raise PlanFormatError(f"bad literal {text!r}: {e}") from None


def _s(x) -> Optional[str]:
    return None if x is None else str(x)


def plan_to_json(fp: FabulaPlan) -> str:
    """Serialize a fabula plan.

    Beyond the standard fields every step carries ``roles`` (one entry per
    actor, needed for multi-actor steps) and the plan carries ``meta_steps``
    when meta-level steps were dropped from the story.
    """
    steps = []
    for s in fp.steps:
        steps.append(
            {
                "index": s.index,
                "action": s.action,
                "args": list(s.args),
                "actor": s.actor,
                "intention": _s(s.intention),
                "chosen_effect": _s(s.chosen),
                "roles": [
                    {"actor": r.actor, "intention": _s(r.intention), "chosen_effect": _s(r.chosen)} for r in s.roles
                ],
            }
        )
    doc = {
        "steps": steps,
        "causal_links": [{"from": l.producer, "to": l.consumer, "fact": str(l.fact)} for l in fp.causal_links],
        "motivational_links": [
            {"from": l.producer, "to": l.consumer, "intention": str(l.intention)} for l in fp.motivational_links
        ],
        "orderings": [{"before": o.before, "after": o.after} for o in fp.orderings],
        "frames": [
            {
                "actor": f.actor,
                "goal": str(f.goal),
                "steps": list(f.steps),
                "motivating_step": f.motivating_step,
                "final_step": f.final_step,
            }
            for f in fp.frames
        ],
    }
    if fp.meta_steps:
        doc["meta_steps"] = list(fp.meta_steps)
    return json.dumps(doc, indent=2) + "\n"


def _req(obj: dict, key: str, kind, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise PlanFormatError(f"{where}: missing field {key!r}")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise PlanFormatError(f"{where}: field {key!r} has the wrong type")
    return val


def plan_from_json(text: str, domain: NarrativeDomain, problem: NarrativeProblem) -> FabulaPlan:
    """Read a plan written by ``plan_to_json`` (or by hand).

    Step preconditions and effects are re-derived from the domain.  Missing
    link/ordering/frame sections are read as empty.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise PlanFormatError(f"invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise PlanFormatError("plan JSON must be an object")
    steps = []
    for k, raw in enumerate(_req(doc, "steps", list, "plan")):
        where = f"step {k}"
        index = _req(raw, "index", int, where)
        if index != k:
            raise PlanFormatError(f"{where}: index {index} out of sequence")
        action = _req(raw, "action", str, where)
        args = tuple(_req(raw, "args", list, where))
        try:
            _, _, pre, eff = ground_source_step(domain, action, args)
        except Exception as e:
            raise PlanFormatError(f"{where}: {e}") from None
        roles_raw = raw.get("roles")
        if roles_raw is None:
            roles_raw = [] if raw.get("actor") is None else [raw]
        roles = []
        for r in roles_raw:
            intention = r.get("intention")
            chosen = r.get("chosen_effect")
            roles.append(
                Role(
                    _req(r, "actor", str, where),
                    None if intention is None else _plain(parse_fact(intention), where),
                    None if chosen is None else parse_literal(chosen),
                )
            )
        steps.append(FabulaStep(k, action, args, tuple(roles), pre, eff))
    causal = [
        CausalLink.make(_req(l, "from", int, "causal link"), _req(l, "to", int, "causal link"), parse_fact(_req(l, "fact", str, "causal link")))
        for l in doc.get("causal_links", [])
    ]
    motivational = []
    for l in doc.get("motivational_links", []):
        m = parse_fact(_req(l, "intention", str, "motivational link"))
        if not isinstance(m, ModalAtom):
            raise PlanFormatError(f"motivational link intention {m} is not an intends atom")
        motivational.append(MotivationalLink.make(_req(l, "from", int, "motivational link"), _req(l, "to", int, "motivational link"), m))
    orderings = [
        OrderingConstraint(_req(o, "before", int, "ordering"), _req(o, "after", int, "ordering"))
        for o in doc.get("orderings", [])
    ]
    frames = []
    for i, f in enumerate(doc.get("frames", [])):
        where = f"frame {i}"
        final = f.get("final_step")
        if final is not None and not isinstance(final, int):
            raise PlanFormatError(f"{where}: final_step must be an integer or null")
        frames.append(
            FrameOfCommitment(
                _req(f, "actor", str, where),
                _plain(parse_fact(_req(f, "goal", str, where)), where),
                tuple(_req(f, "steps", list, where)),
                _req(f, "motivating_step", int, where),
                final,
            )
        )
    return FabulaPlan(
        steps,
        causal,
        motivational,
        orderings,
        frames,
        frozenset(problem.init),
        tuple(problem.outcome),
        list(doc.get("meta_steps", [])),
    )


def _plain(a, where: str) -> Atom:
    if not isinstance(a, Atom):
        raise PlanFormatError(f"{where}: {a} must be a plain atom")
    return a


# ── DOT ──────────────────────────────────────────────────────────────────────


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(fp: FabulaPlan) -> str:
    """Graphviz rendering.

    One node per story step; frames of commitment become clusters (a step in
    several frames is drawn in the first).  Causal links are solid and bold
    when they carry the producing step's chosen effect; motivational links
    are gray; ordering constraints not backed by a link are dashed.  Links
    from the initial state or to the goal are not drawn.
    """
    lines = ["digraph fabula {", "  rankdir=LR;", "  node [shape=box, fontname=Helvetica];"]
    placed: set[int] = set()
    for i, fr in enumerate(fp.frames):
        members = [k for k in fr.steps if k not in placed and 0 <= k < len(fp.steps)]
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f"    label={_q(f'{fr.actor}: {fr.goal}')};")
        lines.append("    style=rounded;")
        for k in members:
            lines.append(f"    {_node(fp.steps[k])}")
            placed.add(k)
        lines.append("  }")
    for s in fp.steps:
        if s.index not in placed:
            lines.append(f"  {_node(s)}")
    for l in fp.causal_links:
        if l.producer < 0 or l.consumer < 0:
            continue
        chosen = {r.chosen.atom for r in fp.steps[l.producer].roles if r.chosen is not None and r.chosen.positive}
        style = "bold" if l.fact in chosen else "solid"
        lines.append(f"  s{l.producer} -> s{l.consumer} [label={_q(str(l.fact))}, style={style}];")
    for l in fp.motivational_links:
        if l.producer < 0 or l.consumer < 0:
            continue
        lines.append(f"  s{l.producer} -> s{l.consumer} [label={_q(str(l.intention))}, color=gray, fontcolor=gray];")
    for o in fp.pure_orderings():
        if o.before < 0 or o.after < 0:
            continue
        lines.append(f"  s{o.before} -> s{o.after} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _node(s: FabulaStep) -> str:
    return f"s{s.index} [label={_q(f'{s.index}: {s}')}];"
