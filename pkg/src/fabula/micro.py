"""Random micro narrative domains for property tests and the ``demo micro``
command.

Each generated domain has at most 4 characters, 3 predicates and 6 actions,
small enough for exhaustive state-space enumeration of the compiled task.
With ``toggling=True`` every effect of every action is toggling: the
precondition contains the negation of each plain effect, and intends effects
only occur in intentional actions whose sole positive effect they are.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass(frozen=True)
class MicroDomain:
    seed: int
    domain: str
    problem: str

    @property
    def text(self) -> str:
        return self.domain + "\n" + self.problem


def _atom(pred: str, args) -> str:
    return "(" + " ".join((pred,) + tuple(args)) + ")"


def random_micro(
    seed: int,
    toggling: bool = True,
    max_characters: int = 4,
    max_predicates: int = 3,
    max_actions: int = 6,
    delegation: float = 0.3,
) -> MicroDomain:
    rng = random.Random(seed)
    n_chars = rng.randint(2, max_characters)
    chars = [f"c{i}" for i in range(n_chars)]
    things = [f"t{i}" for i in range(rng.randint(0, 1))]
    n_preds = rng.randint(1, max_predicates)
    preds = []
    for i in range(n_preds):
        arity = rng.choice([1, 1, 2])
        types = ["character"]
        if arity == 2:
            types.append("thing" if things and rng.random() < 0.4 else "character")
        preds.append((f"p{i}", types))

    def objects_of(t):
        return chars if t == "character" else things

    actions = []
    n_actions = rng.randint(2, max_actions)
    while len(actions) < n_actions:
        # redraw when the parameters leave no predicate instantiable
        ai = len(actions)
        n_params = rng.randint(1, 3)
        ptypes = ["character"] + [rng.choice(["character", "character", "thing"] if things else ["character"]) for _ in range(n_params - 1)]
        params = [(f"?x{j}", t) for j, t in enumerate(ptypes)]
        happening = rng.random() < 0.2
        actor = None if happening else "?x0"

        def rand_atom():
            name, types = rng.choice(preds)
            args = []
            for t in types:
                cands = [v for v, pt in params if pt == t]
                if not cands:
                    return None
                args.append(rng.choice(cands))
            return _atom(name, args)

        pre: dict[str, bool] = {}
        eff: dict[str, bool] = {}
        distinct = []
        char_params = [v for v, t in params if t == "character"]
        delegate = (
            actor is not None and len(char_params) >= 2 and rng.random() < delegation
        )
        if delegate:
            target = char_params[1]
            inner = rand_atom()
            if inner is None:
                delegate = False
        if delegate:
            intends_eff = f"(intends {target} {inner})"
            distinct.append(f"(not (= {actor} {target}))")
            for _ in range(rng.randint(0, 1)):
                a = rand_atom()
                if a is not None:
                    pre[a] = rng.random() < 0.7
            effects_text = [intends_eff]
        else:
            for _ in range(rng.randint(1, 2)):
                a = rand_atom()
                if a is not None and a not in eff:
                    eff[a] = rng.random() < 0.75
            if not any(eff.values()):
                a = rand_atom()
                if a is None:
                    continue
                eff[a] = True
            for _ in range(rng.randint(0, 2)):
                a = rand_atom()
                if a is not None and a not in eff:
                    pre[a] = rng.random() < 0.7
            if toggling:
                for a, positive in eff.items():
                    pre[a] = not positive
            effects_text = [a if positive else f"(not {a})" for a, positive in eff.items()]
            if not toggling and actor is not None and len(char_params) >= 2 and rng.random() < delegation:
                inner = rand_atom()
                if inner is not None:
                    effects_text.append(f"(intends {char_params[1]} {inner})")
        pre_text = [a if positive else f"(not {a})" for a, positive in pre.items()] + distinct
        lines = [f"  (:action a{ai}", "   :parameters (" + " ".join(f"{v} - {t}" for v, t in params) + ")"]
        if actor is not None:
            lines.append(f"   :actors ({actor})")
        if pre_text:
            lines.append("   :precondition (and " + " ".join(pre_text) + ")")
        lines.append("   :effect (and " + " ".join(effects_text) + "))")
        actions.append("\n".join(lines))

    types_line = "character thing - object" if things else "character - object"
    pred_lines = []
    for name, types in preds:
        pred_lines.append(_atom(name, [f"?a{j} - {t}" for j, t in enumerate(types)]))
    domain = (
        f"(define (domain micro-{seed})\n"
        "  (:requirements :strips :typing :negative-preconditions :equality)\n"
        f"  (:types {types_line})\n"
        f"  (:predicates {' '.join(pred_lines)})\n" + "\n".join(actions) + "\n)\n"
    )

    ground_atoms = []
    for name, types in preds:
        pools = [objects_of(t) for t in types]
        if any(not p for p in pools):
            continue
        combos = [[]]
        for pool in pools:
            combos = [c + [o] for c in combos for o in pool]
        ground_atoms += [_atom(name, c) for c in combos]
    rng.shuffle(ground_atoms)
    k = rng.randint(0, max(0, len(ground_atoms) // 2))
    init = sorted(ground_atoms[:k])
    rest = [a for a in ground_atoms if a not in init]
    outcome = sorted(rng.sample(rest, min(len(rest), rng.randint(1, 2)))) if rest else [ground_atoms[0]]
    intentions = []
    for _ in range(rng.randint(0, 2)):
        if rest:
            intentions.append(f"(intends {rng.choice(chars)} {rng.choice(rest)})")
    intentions = sorted(set(intentions))
    objs = " ".join(chars) + " - character" + ((" " + " ".join(things) + " - thing") if things else "")
    problem = (
        f"(define (problem micro-{seed}-story)\n"
        f"  (:domain micro-{seed})\n"
        f"  (:objects {objs})\n"
        f"  (:init {' '.join(init + intentions)})\n"
        f"  (:outcome (and {' '.join(outcome)})))\n"
    )
    return MicroDomain(seed, domain, problem)
