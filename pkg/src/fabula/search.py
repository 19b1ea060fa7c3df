"""Forward state-space search over ground tasks.

States are Python ints used as bitsets over fact ids.  Negative
preconditions are handled by the relaxation as "complement" pseudo-facts:
``not f`` holds at zero cost when f is false and is otherwise achieved by any
action deleting f.
"""

from __future__ import annotations

import heapq
import itertools
import json
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Optional

from .ground import GroundTask

INF = float("inf")
HMAX, HADD = "hmax", "hadd"


class SearchLimit(Exception):
    """Resource exhaustion (as opposed to proven unsolvability)."""


def _mask(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


class Compiled:
    """Bitset view of a GroundTask."""

    def __init__(self, gt: GroundTask):
        self.gt = gt
        self.n = len(gt.facts)
        self.full = (1 << self.n) - 1
        self.pre = [_mask(a.pre) for a in gt.actions]
        self.neg = [_mask(a.neg) for a in gt.actions]
        self.add = [_mask(a.add) for a in gt.actions]
        self.dele = [_mask(a.dele) for a in gt.actions]
        self.keep = [self.full & ~d for d in self.dele]
        self.init = _mask(gt.init)
        self.goal = _mask(gt.goal)
        self.order = list(range(len(gt.actions)))
        # for hadd: per-action lists of precondition ids and pseudo ids
        self.pre_ids = [sorted(a.pre) for a in gt.actions]
        self.neg_ids = [sorted(a.neg) for a in gt.actions]
        self.add_ids = [sorted(a.add) for a in gt.actions]
        self.del_ids = [sorted(a.dele) for a in gt.actions]
        self.nprec = [len(p) + len(q) for p, q in zip(self.pre_ids, self.neg_ids)]
        self.free = [i for i in self.order if self.nprec[i] == 0]
        self.waiting: list[list[int]] = [[] for _ in range(2 * self.n)]
        for i in self.order:
            for f in self.pre_ids[i]:
                self.waiting[f].append(i)
            for f in self.neg_ids[i]:
                self.waiting[self.n + f].append(i)
        self.goal_ids = sorted(gt.goal)

    def applicable(self, s: int, i: int) -> bool:
        return (s & self.pre[i]) == self.pre[i] and not (s & self.neg[i])

    def successors(self, s: int):
        for i in self.order:
            p = self.pre[i]
            if (s & p) == p and not (s & self.neg[i]):
                yield i, (s & self.keep[i]) | self.add[i]

    def is_goal(self, s: int) -> bool:
        return (s & self.goal) == self.goal


def _hmax(c: Compiled, s: int) -> float:
    """Relaxed planning graph depth at which every goal fact appears."""
    if (s & c.goal) == c.goal:
        return 0
    pos, negs = s, c.full & ~s
    pending = list(c.order)
    layer = 0
    while True:
        layer += 1
        new_pos, new_neg = pos, negs
        rest = []
        for i in pending:
            p, n = c.pre[i], c.neg[i]
            if (pos & p) == p and (negs & n) == n:
                new_pos |= c.add[i]
                new_neg |= c.dele[i]
            else:
                rest.append(i)
        if new_pos == pos and new_neg == negs:
            return INF
        pos, negs, pending = new_pos, new_neg, rest
        if (pos & c.goal) == c.goal:
            return layer


def _hadd(c: Compiled, s: int, helpful: Optional[list] = None) -> float:
    """Additive relaxed cost over facts and complement facts.

    Unit action costs make every value an integer, so a bucket queue
    replaces the priority heap.  When ``helpful`` is a list, the actions of
    the relaxed plan read off the cheapest supporters that are applicable in
    ``s`` are appended to it (preferred operators).
    """
    if (s & c.goal) == c.goal:
        return 0
    track = helpful is not None
    support: dict[int, int] = {}
    n = c.n
    cost = [INF] * (2 * n)  # [0, n): f true; [n, 2n): f false
    buckets: list[list[int]] = [[]]
    zero = buckets[0]
    for f in range(n):
        if s >> f & 1:
            cost[f] = 0
            zero.append(f)
        else:
            cost[n + f] = 0
            zero.append(n + f)
    missing = list(c.nprec)
    acc = [0] * len(missing)
    waiting = c.waiting
    add_ids, del_ids = c.add_ids, c.del_ids

    def fire(i: int, val: int):
        for f in add_ids[i]:
            if val < cost[f]:
                cost[f] = val
                if track:
                    support[f] = i
                while len(buckets) <= val:
                    buckets.append([])
                buckets[val].append(f)
        for f in del_ids[i]:
            x = n + f
            if val < cost[x]:
                cost[x] = val
                if track:
                    support[x] = i
                while len(buckets) <= val:
                    buckets.append([])
                buckets[val].append(x)

    for i in c.free:
        fire(i, 1)
    done = bytearray(2 * n)
    d = 0
    while d < len(buckets):
        for x in buckets[d]:
            if done[x] or cost[x] != d:
                continue
            done[x] = 1
            for i in waiting[x]:
                acc[i] += d
                missing[i] -= 1
                if missing[i] == 0:
                    fire(i, acc[i] + 1)
        buckets[d] = None  # type: ignore[call-overload]
        d += 1
    total = 0
    for f in c.goal_ids:
        if cost[f] == INF:
            return INF
        total += cost[f]
    if track:
        seen: set[int] = set()
        chosen: set[int] = set()
        stack = [f for f in c.goal_ids if cost[f] > 0]
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            i = support[x]
            if i in chosen:
                continue
            chosen.add(i)
            for f in c.pre_ids[i]:
                if cost[f] > 0:
                    stack.append(f)
            for f in c.neg_ids[i]:
                if cost[n + f] > 0:
                    stack.append(n + f)
        helpful.extend(sorted(i for i in chosen if c.applicable(s, i)))
    return total


def heuristic(state, gt, mode: str = HMAX, compiled: Optional[Compiled] = None) -> float:
    """hmax (admissible) or hadd for a state given as a set of fact ids or a bitset."""
    c = compiled or Compiled(gt)
    s = state if isinstance(state, int) else _mask(state)
    if mode == HMAX:
        return _hmax(c, s)
    if mode == HADD:
        return _hadd(c, s)
    raise ValueError(f"unknown heuristic {mode!r}")


# ── plans and results ────────────────────────────────────────────────────────


@dataclass
class SearchResult:
    plan: Optional[list[int]]
    status: str  # "solved" | "unsolvable" | "limit"
    expanded: int = 0
    generated: int = 0
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def cost(self) -> Optional[int]:
        return None if self.plan is None else len(self.plan)

    @property
    def solved(self) -> bool:
        return self.status == "solved"

    def stats(self) -> dict:
        out = {
            "status": self.status,
            "cost": self.cost,
            "expanded": self.expanded,
            "generated": self.generated,
            "seconds": round(self.seconds, 6),
        }
        out.update(self.extra)
        return out

    def stats_json(self) -> str:
        return json.dumps(self.stats(), sort_keys=True)


def _extract(parents: dict, s: int) -> list[int]:
    plan = []
    while True:
        entry = parents[s]
        if entry is None:
            break
        s, a = entry
        plan.append(a)
    plan.reverse()
    return plan


def astar(gt: GroundTask, mode: str = HMAX, max_expansions: Optional[int] = None) -> SearchResult:
    """A* with unit costs.  Ties on f break on lower h, then lower id of the
    action that generated the node, then insertion order."""
    t0 = time.perf_counter()
    c = Compiled(gt)
    h0 = heuristic(c.init, gt, mode, c)
    if h0 == INF:
        return SearchResult(None, "unsolvable", 0, 0, time.perf_counter() - t0)
    counter = itertools.count()
    heap = [(h0, h0, -1, next(counter), c.init)]
    g_best = {c.init: 0}
    parents: dict[int, Optional[tuple[int, int]]] = {c.init: None}
    hcache = {c.init: h0}
    closed: set[int] = set()
    expanded = generated = 0
    while heap:
        f, h, _, _, s = heapq.heappop(heap)
        g = f - h
        if g > g_best.get(s, INF) or s in closed and g >= g_best[s]:
            continue
        if c.is_goal(s):
            return SearchResult(_extract(parents, s), "solved", expanded, generated, time.perf_counter() - t0)
        closed.add(s)
        expanded += 1
        if max_expansions is not None and expanded > max_expansions:
            return SearchResult(None, "limit", expanded, generated, time.perf_counter() - t0)
        for i, t in c.successors(s):
            generated += 1
            ng = g + 1
            if ng >= g_best.get(t, INF):
                continue
            ht = hcache.get(t)
            if ht is None:
                ht = heuristic(t, gt, mode, c)
                hcache[t] = ht
            if ht == INF:
                continue
            g_best[t] = ng
            parents[t] = (s, i)
            closed.discard(t)
            heapq.heappush(heap, (ng + ht, ht, i, next(counter), t))
    return SearchResult(None, "unsolvable", expanded, generated, time.perf_counter() - t0)


def gbfs(gt: GroundTask, max_expansions: Optional[int] = None) -> SearchResult:
    """Greedy best-first search on hadd; returns a valid, not necessarily
    shortest, plan.

    Two open lists ordered by hadd alternate: one with every generated node
    and one with nodes reached by preferred operators (relaxed-plan actions
    applicable in the parent).  Progress on the best h boosts the preferred
    list.  Ties break on insertion order, so the search is deterministic.
    """
    t0 = time.perf_counter()
    c = Compiled(gt)
    helpful0: list[int] = []
    h0 = _hadd(c, c.init, helpful0)
    if h0 == INF:
        return SearchResult(None, "unsolvable", 0, 0, time.perf_counter() - t0)
    counter = itertools.count()
    info = {c.init: (h0, helpful0)}
    queues: list[list] = [[(h0, next(counter), c.init)], [(h0, next(counter), c.init)]]
    parents: dict[int, Optional[tuple[int, int]]] = {c.init: None}
    closed: set[int] = set()
    expanded = generated = 0
    best = h0
    boost = 0
    turn = 0
    while queues[0] or queues[1]:
        if boost > 0 and queues[1]:
            q = 1
            boost -= 1
        else:
            q = turn if queues[turn] else 1 - turn
            turn = 1 - turn
        h, _, s = heapq.heappop(queues[q])
        if s in closed:
            continue
        closed.add(s)
        if c.is_goal(s):
            return SearchResult(_extract(parents, s), "solved", expanded, generated, time.perf_counter() - t0)
        expanded += 1
        if max_expansions is not None and expanded > max_expansions:
            return SearchResult(None, "limit", expanded, generated, time.perf_counter() - t0)
        if h < best:
            best = h
            boost += 1000
        preferred = set(info[s][1])
        for i, t in c.successors(s):
            generated += 1
            if t in parents:
                continue
            parents[t] = (s, i)
            helpful: list[int] = []
            ht = _hadd(c, t, helpful)
            if ht == INF:
                continue
            info[t] = (ht, helpful)
            heapq.heappush(queues[0], (ht, next(counter), t))
            if i in preferred:
                heapq.heappush(queues[1], (ht, next(counter), t))
    return SearchResult(None, "unsolvable", expanded, generated, time.perf_counter() - t0)


# ── all plans of a given cost ────────────────────────────────────────────────


@dataclass
class PlanDag:
    """Every plan of exactly ``cost`` steps, as a layered graph.

    ``edges[(state, depth)]`` lists (action id, successor) pairs that stay on
    some plan of the requested length.
    """

    cost: int
    root: tuple[int, int]
    edges: dict[tuple[int, int], list[tuple[int, tuple[int, int]]]]
    expanded: int = 0
    nonempty: bool = False

    def count(self) -> int:
        memo: dict = {}

        def rec(node):
            if node[1] == self.cost:
                return 1
            if node in memo:
                return memo[node]
            total = sum(rec(t) for _, t in self.edges.get(node, ()))
            memo[node] = total
            return total

        return rec(self.root) if self.nonempty else 0

    def plans(self, cap: Optional[int] = None) -> tuple[list[list[int]], bool]:
        """Plans in lexicographic order of action ids; (plans, truncated)."""
        out: list[list[int]] = []
        stack: list[int] = []
        truncated = False

        def rec(node) -> bool:
            nonlocal truncated
            if node[1] == self.cost:
                if cap is not None and len(out) >= cap:
                    truncated = True
                    return False
                out.append(list(stack))
                return True
            for a, t in self.edges.get(node, ()):
                stack.append(a)
                ok = rec(t)
                stack.pop()
                if not ok:
                    return False
            return True

        if self.nonempty:
            rec(self.root)
        return out, truncated

    def variations(self, label: Callable[[int], Optional[Hashable]], cap: Optional[int] = None) -> tuple[list, bool]:
        """Distinct multisets of step labels over all plans (labels that are
        None are ignored).  Returns (sorted list of sorted label tuples,
        truncated)."""
        memo: dict = {}
        truncated = False

        def rec(node) -> frozenset:
            nonlocal truncated
            if node[1] == self.cost:
                return frozenset([()])
            if node in memo:
                return memo[node]
            acc: set = set()
            for a, t in self.edges.get(node, ()):
                lab = label(a)
                for rest in rec(t):
                    acc.add(tuple(sorted(rest + ((lab,) if lab is not None else ()), key=repr)))
                if cap is not None and len(acc) > cap:
                    truncated = True
                    break
            res = frozenset(acc)
            memo[node] = res
            return res

        if not self.nonempty:
            return [], False
        found = sorted(rec(self.root), key=repr)
        if cap is not None and len(found) > cap:
            found, truncated = found[:cap], True
        return found, truncated


def plan_dag(gt: GroundTask, cost: int, max_nodes: Optional[int] = None) -> PlanDag:
    """Layered forward search keeping nodes with g + hmax <= cost, then a
    backward sweep keeping only nodes that reach the goal at depth ``cost``."""
    c = Compiled(gt)
    hcache: dict[int, float] = {}

    def h(s: int) -> float:
        v = hcache.get(s)
        if v is None:
            v = _hmax(c, s)
            hcache[s] = v
        return v

    root = (c.init, 0)
    forward: dict[tuple[int, int], list[tuple[int, tuple[int, int]]]] = {}
    layer = {c.init} if h(c.init) <= cost else set()
    expanded = 0
    for depth in range(cost):
        nxt: set[int] = set()
        for s in sorted(layer):
            succ = []
            for i, t in c.successors(s):
                if depth + 1 + h(t) <= cost:
                    succ.append((i, (t, depth + 1)))
                    nxt.add(t)
            forward[(s, depth)] = succ
            expanded += 1
            if max_nodes is not None and expanded > max_nodes:
                raise SearchLimit(f"plan graph exceeds {max_nodes} nodes")
        layer = nxt
    alive = {(s, cost) for s in layer if c.is_goal(s)}
    edges: dict[tuple[int, int], list[tuple[int, tuple[int, int]]]] = {}
    for depth in range(cost - 1, -1, -1):
        for node, succ in forward.items():
            if node[1] != depth:
                continue
            kept = [(a, t) for a, t in succ if t in alive]
            if kept:
                kept.sort(key=lambda x: x[0])
                edges[node] = kept
        alive = {n for n in edges if n[1] == depth}
    nonempty = c.is_goal(c.init) if cost == 0 else root in edges
    return PlanDag(cost, root, edges, expanded, nonempty)


@dataclass
class Enumeration:
    cost: Optional[int]
    plans: list[list[int]]
    truncated: bool
    total: int
    dag: Optional[PlanDag] = None


def enumerate_optimal(gt: GroundTask, cost: Optional[int] = None, cap: Optional[int] = 10000) -> Enumeration:
    """All plans of length ``cost`` (the optimal cost from A* when omitted),
    in lexicographic order of action ids, truncated at ``cap`` plans."""
    if cost is None:
        res = astar(gt)
        if not res.solved:
            return Enumeration(None, [], False, 0)
        cost = res.cost
    dag = plan_dag(gt, cost)
    plans, truncated = dag.plans(cap)
    return Enumeration(cost, plans, truncated, dag.count(), dag)


# ── brute force (used as a test oracle) ──────────────────────────────────────


def bfs_optimal(gt: GroundTask, max_states: int = 1_000_000) -> tuple[Optional[int], list[list[int]]]:
    """Breadth-first optimal cost and every optimal plan, by exhaustive search."""
    c = Compiled(gt)
    if c.is_goal(c.init):
        return 0, [[]]
    preds: dict[int, list[tuple[int, int]]] = {c.init: []}
    depth = {c.init: 0}
    frontier = [c.init]
    d = 0
    goals: list[int] = []
    while frontier and not goals:
        d += 1
        nxt = []
        for s in frontier:
            for i, t in c.successors(s):
                if t not in depth:
                    depth[t] = d
                    preds[t] = [(s, i)]
                    nxt.append(t)
                elif depth[t] == d:
                    preds[t].append((s, i))
        if len(depth) > max_states:
            raise SearchLimit("state space too large for brute force")
        goals = [s for s in nxt if c.is_goal(s)]
        frontier = nxt
    if not goals:
        return None, []
    plans: list[list[int]] = []

    def back(s: int, suffix: list[int]):
        if s == c.init and depth[s] == 0:
            plans.append(list(reversed(suffix)))
            return
        for p, i in preds[s]:
            suffix.append(i)
            back(p, suffix)
            suffix.pop()

    for g in goals:
        back(g, [])
    plans.sort()
    return d, plans


def reachable_states(gt: GroundTask, max_states: int = 1_000_000) -> list[int]:
    c = Compiled(gt)
    seen = {c.init}
    queue = deque([c.init])
    while queue:
        s = queue.popleft()
        for _, t in c.successors(s):
            if t not in seen:
                seen.add(t)
                if len(seen) > max_states:
                    raise SearchLimit("state space too large")
                queue.append(t)
    return sorted(seen)


def state_facts(state: int) -> set[int]:
    out, i = set(), 0
    while state:
        if state & 1:
            out.add(i)
        state >>= 1
        i += 1
    return out
