"""Core symbolic model: types, atoms, modal literals, unification and flattening.

Terms are plain strings.  A term starting with ``?`` is a variable, anything
else is an object symbol.  Everything here is immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

ROOT_TYPE = "object"
CHARACTER_TYPE = "character"

INTENDS = "intends"
DELEGATED = "delegated"
JUSTIFIED = "justified"
MODALITIES = (INTENDS, DELEGATED, JUSTIFIED)


def is_var(term: str) -> bool:
    return term.startswith("?")


class ModelError(Exception):
    """Raised for ill-typed or otherwise malformed model objects."""


# ── types ────────────────────────────────────────────────────────────────────


class TypeTree:
    """Single-inheritance type hierarchy with implicit root ``object``."""

    def __init__(self, parents: Optional[Mapping[str, str]] = None):
        self.parents: dict[str, str] = {}
        self._implicit: set[str] = set()  # mentioned only as a parent so far
        for child, parent in (parents or {}).items():
            self.add(child, parent)

    def add(self, child: str, parent: str = ROOT_TYPE) -> None:
        if child == ROOT_TYPE:
            return
        old = self.parents.get(child)
        if old is not None and old != parent and child not in self._implicit:
            raise ModelError(f"type {child} declared with two parents ({old}, {parent})")
        self._implicit.discard(child)
        self.parents[child] = parent
        if parent != ROOT_TYPE and parent not in self.parents:
            self.parents[parent] = ROOT_TYPE
            self._implicit.add(parent)

    def __contains__(self, name: str) -> bool:
        return name == ROOT_TYPE or name in self.parents

    def __iter__(self):
        yield ROOT_TYPE
        yield from self.parents

    def ancestors(self, name: str) -> list[str]:
        chain = [name]
        seen = {name}
        while name != ROOT_TYPE:
            name = self.parents.get(name, ROOT_TYPE)
            if name in seen:
                raise ModelError(f"cyclic type hierarchy at {name}")
            seen.add(name)
            chain.append(name)
        return chain

    def is_subtype(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def compatible(self, a: str, b: str) -> bool:
        return self.is_subtype(a, b) or self.is_subtype(b, a)

    def meet(self, a: str, b: str) -> Optional[str]:
        """The more specific of two compatible types, else None."""
        if self.is_subtype(a, b):
            return a
        if self.is_subtype(b, a):
            return b
        return None

    def items(self):
        return sorted(self.parents.items())

    def __eq__(self, other) -> bool:
        return isinstance(other, TypeTree) and self.parents == other.parents

    def __repr__(self) -> str:
        return f"TypeTree({self.parents!r})"


@dataclass(frozen=True)
class TypeEnv:
    """Typing context used for type-aware unification.

    ``terms`` maps variables and object symbols to their declared types.
    Terms without an entry are treated as ``object``.
    """

    tree: TypeTree
    terms: Mapping[str, str] = field(default_factory=dict)

    def type_of(self, term: str) -> str:
        return self.terms.get(term, ROOT_TYPE)

    def extended(self, more: Mapping[str, str]) -> "TypeEnv":
        merged = dict(self.terms)
        merged.update(more)
        return TypeEnv(self.tree, merged)


# ── atoms and literals ───────────────────────────────────────────────────────


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return f"({self.predicate})"
        return f"({self.predicate} {' '.join(self.args)})"

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(a for a in self.args if is_var(a))

    def is_ground(self) -> bool:
        return not any(is_var(a) for a in self.args)


@dataclass(frozen=True, order=True)
class ModalAtom:
    """``intends``/``delegated``: agent + inner atom.

    ``justified``: inner atom + the intention (an intends ModalAtom), no agent.
    """

    modality: str
    agent: Optional[str]
    inner: Atom
    intention: Optional["ModalAtom"] = None

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ModelError(f"unknown modality {self.modality!r}")
        if self.modality == JUSTIFIED:
            if self.agent is not None:
                raise ModelError("justified takes no agent")
            if self.intention is None or self.intention.modality != INTENDS:
                raise ModelError("justified needs an intends modal atom as second argument")
        else:
            if self.agent is None:
                raise ModelError(f"{self.modality} needs an agent")
            if self.intention is not None:
                raise ModelError(f"{self.modality} takes a single inner atom")

    def __str__(self) -> str:
        if self.modality == JUSTIFIED:
            return f"(justified {self.inner} {self.intention})"
        return f"({self.modality} {self.agent} {self.inner})"

    @property
    def args(self) -> tuple[str, ...]:
        if self.modality == JUSTIFIED:
            return self.inner.args + self.intention.args
        return (self.agent,) + self.inner.args

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(a for a in self.args if is_var(a))

    def is_ground(self) -> bool:
        return not self.variables


AnyAtom = Union[Atom, ModalAtom]


def intends(agent: str, inner: Atom) -> ModalAtom:
    return ModalAtom(INTENDS, agent, inner)


def delegated(agent: str, inner: Atom) -> ModalAtom:
    return ModalAtom(DELEGATED, agent, inner)


def justified(inner: Atom, intention: ModalAtom) -> ModalAtom:
    return ModalAtom(JUSTIFIED, None, inner, intention)


@dataclass(frozen=True, order=True)
class Literal:
    """A possibly negated plain or modal atom (an "extended literal")."""

    atom: AnyAtom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"(not {self.atom})"

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    @property
    def is_modal(self) -> bool:
        return isinstance(self.atom, ModalAtom)

    @property
    def is_intends(self) -> bool:
        return isinstance(self.atom, ModalAtom) and self.atom.modality == INTENDS


def pos(atom: AnyAtom) -> Literal:
    return Literal(atom, True)


def neg(atom: AnyAtom) -> Literal:
    return Literal(atom, False)


# ── substitution and unification ─────────────────────────────────────────────

Substitution = Mapping[str, str]


def _sub_term(s: Substitution, t: str) -> str:
    return s.get(t, t)


def substitute(s: Substitution, e, env: Optional[TypeEnv] = None):
    """Apply ``s`` to an Atom, ModalAtom or Literal.

    With ``env`` given, each binding is checked for type compatibility and a
    ModelError is raised on a violation.
    """
    if env is not None:
        for var, term in s.items():
            vt, tt = env.type_of(var), env.type_of(term)
            if is_var(term):
                ok = env.tree.compatible(vt, tt)
            else:
                ok = env.tree.is_subtype(tt, vt)
            if not ok:
                raise ModelError(f"binding {var} ({vt}) -> {term} ({tt}) violates types")
    if isinstance(e, Literal):
        return Literal(substitute(s, e.atom), e.positive)
    if isinstance(e, Atom):
        return Atom(e.predicate, tuple(_sub_term(s, a) for a in e.args))
    if isinstance(e, ModalAtom):
        return ModalAtom(
            e.modality,
            None if e.agent is None else _sub_term(s, e.agent),
            substitute(s, e.inner),
            None if e.intention is None else substitute(s, e.intention),
        )
    raise TypeError(f"cannot substitute into {e!r}")


def compose(first: Substitution, second: Substitution) -> dict[str, str]:
    """Substitution equivalent to applying ``first`` then ``second``."""
    out = {v: _sub_term(second, t) for v, t in first.items()}
    for v, t in second.items():
        out.setdefault(v, t)
    return {v: t for v, t in out.items() if v != t}


def unify(a: AnyAtom, b: AnyAtom, env: Optional[TypeEnv] = None) -> Optional[dict[str, str]]:
    """Most general unifier of two (flat, function-free) atoms, or None.

    Variables of ``a`` are preferably bound to terms of ``b``.  The result is
    idempotent.  With ``env`` the unifier must respect declared types: a
    constant may only join a variable whose type it belongs to, and variables
    may only be merged when their types lie on one chain.
    """
    if type(a) is not type(b):
        return None
    if isinstance(a, ModalAtom):
        if a.modality != b.modality:
            return None
        if (a.intention is None) != (b.intention is None):
            return None
        left = ((a.agent,) if a.agent is not None else ()) + a.inner.args
        right = ((b.agent,) if b.agent is not None else ()) + b.inner.args
        if a.inner.predicate != b.inner.predicate or len(left) != len(right):
            return None
        if a.intention is not None:
            if a.intention.inner.predicate != b.intention.inner.predicate:
                return None
            left += a.intention.args
            right += b.intention.args
            if len(left) != len(right):
                return None
    else:
        if a.predicate != b.predicate or len(a.args) != len(b.args):
            return None
        left, right = a.args, b.args

    parent: dict[str, str] = {}

    def find(t: str) -> str:
        while t in parent:
            t = parent[t]
        return t

    for x, y in zip(left, right):
        rx, ry = find(x), find(y)
        if rx == ry:
            continue
        if is_var(rx):
            parent[rx] = ry
        elif is_var(ry):
            parent[ry] = rx
        else:
            return None

    terms = set(left) | set(right)
    if env is not None:
        classes: dict[str, list[str]] = {}
        for t in terms:
            classes.setdefault(find(t), []).append(t)
        for rep, members in classes.items():
            consts = [m for m in members if not is_var(m)]
            var_types = [env.type_of(m) for m in members if is_var(m)]
            if consts:
                ctype = env.type_of(consts[0])
                if any(not env.tree.is_subtype(ctype, vt) for vt in var_types):
                    return None
            else:
                for i, t1 in enumerate(var_types):
                    for t2 in var_types[i + 1 :]:
                        if not env.tree.compatible(t1, t2):
                            return None
    return {t: find(t) for t in sorted(terms) if is_var(t) and find(t) != t}


# ── modal flattening ─────────────────────────────────────────────────────────


def flat_name(modality: str, pred: str, intention_pred: Optional[str] = None) -> str:
    if modality == JUSTIFIED:
        return f"justified-{pred}-{intention_pred}"
    return f"{modality}-{pred}"


def flatten_atom(a: AnyAtom) -> Atom:
    if isinstance(a, Atom):
        return a
    if a.modality == JUSTIFIED:
        name = flat_name(JUSTIFIED, a.inner.predicate, a.intention.inner.predicate)
        return Atom(name, a.inner.args + a.intention.args)
    return Atom(flat_name(a.modality, a.inner.predicate), (a.agent,) + a.inner.args)


def flatten_modal(e: Literal) -> Literal:
    """Replace a modal literal by a literal over its "modal predicate".

    ``(intends A (p x))`` becomes ``(intends-p A x)``;
    ``(justified (q v) (intends A (p y)))`` becomes ``(justified-q-p v A y)``.
    """
    if isinstance(e, Literal):
        return Literal(flatten_atom(e.atom), e.positive)
    return Literal(flatten_atom(e), True)


class FlatteningTable:
    """Invertible map between flattened modal predicates and their structure.

    Built from the plain predicate declarations (name -> arity).  Name
    collisions with user predicates, or between two generated names, are
    reported as ModelError instead of being renamed.
    """

    def __init__(self, arities: Mapping[str, int], pairs: Iterable[tuple[str, str]] = ()):
        self.arities = dict(arities)
        self.entries: dict[str, tuple] = {}
        for p in sorted(self.arities):
            self._register(flat_name(INTENDS, p), (INTENDS, p))
            self._register(flat_name(DELEGATED, p), (DELEGATED, p))
        for q, p in pairs:
            self.add_justified(q, p)

    def _register(self, name: str, entry: tuple) -> None:
        if name in self.arities:
            raise ModelError(f"modal predicate name {name} collides with a declared predicate")
        old = self.entries.get(name)
        if old is not None and old != entry:
            raise ModelError(f"modal predicate name {name} is ambiguous: {old} vs {entry}")
        self.entries[name] = entry

    def add_justified(self, q: str, p: str) -> str:
        name = flat_name(JUSTIFIED, q, p)
        self._register(name, (JUSTIFIED, q, p))
        return name

    def is_modal(self, predicate: str) -> bool:
        return predicate in self.entries

    def unflatten(self, a: Atom) -> AnyAtom:
        entry = self.entries.get(a.predicate)
        if entry is None:
            return a
        if entry[0] == JUSTIFIED:
            _, q, p = entry
            nq = self.arities[q]
            inner = Atom(q, a.args[:nq])
            agent = a.args[nq]
            return justified(inner, intends(agent, Atom(p, a.args[nq + 1 :])))
        modality, p = entry
        return ModalAtom(modality, a.args[0], Atom(p, a.args[1:]))
