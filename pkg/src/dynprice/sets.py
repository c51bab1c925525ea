"""Bundle feasibility, surplus minimization and dangerous-set discovery.

The surplus of a buyer set Y in the tight graph is |N(Y)| - b(Y); a set is
dangerous when its surplus is exactly one (|N(Y)| = 2|Y| + 1 in the pure
bi-demand case).  Surplus is minimized by a min-cut computation on a small
capacitated network (source -> buyer at b(t), buyer -> item at infinity,
item -> sink at 1); forced inclusion uses an infinite source arc, forced
exclusion removes the buyer.  Non-emptiness and properness are enforced by
looping over one forced-in and one forced-out buyer.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional

from . import matching
from .errors import ContractViolationError, ModelError
from .matching import BipartiteGraph, BuyerId, ItemId


@dataclass(frozen=True)
class SurplusQuery:
    must_include: frozenset[BuyerId] = field(default_factory=frozenset)
    must_exclude: frozenset[BuyerId] = field(default_factory=frozenset)

    @staticmethod
    def of(include: Iterable[BuyerId] = (), exclude: Iterable[BuyerId] = ()) -> "SurplusQuery":
        return SurplusQuery(frozenset(include), frozenset(exclude))


def feasible_bundle(gpi: BipartiteGraph, t: BuyerId, F: Iterable[ItemId]) -> bool:
    """Whether bundle F can go to t in some b-factor of the tight graph."""
    F = frozenset(F)
    if t not in gpi.capacity or any(s not in gpi.capacity for s in F):
        raise ModelError("unknown buyer or item")
    if not F <= set(gpi.buyer_adj[t]) or len(F) != gpi.capacity[t]:
        raise ContractViolationError(
            f"bundle for {t} must be {gpi.capacity[t]} of its tight neighbors")
    exists, _ = matching.bfactor_exists(gpi.without(F | {t}))
    return exists


def surplus(gpi: BipartiteGraph, Y: Iterable[BuyerId]) -> int:
    Y = frozenset(Y)
    return len(gpi.neighbors(Y)) - sum(gpi.capacity[t] for t in Y)


def is_dangerous(gpi: BipartiteGraph, Y: Iterable[BuyerId]) -> bool:
    Y = frozenset(Y)
    return bool(Y) and Y != frozenset(gpi.buyers) and surplus(gpi, Y) == 1


def _max_flow(adj: dict[str, list[str]], cap: dict[tuple[str, str], int],
              source: str, sink: str) -> tuple[int, frozenset[str]]:
    """Edmonds-Karp; returns (flow value, source side of the min cut)."""
    residual = dict(cap)
    for (u, v) in cap:
        residual.setdefault((v, u), 0)
    total = 0
    while True:
        parent: dict[str, Optional[str]] = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in adj[u]:
                if v not in parent and residual.get((u, v), 0) > 0:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            break
        bottleneck = None
        v = sink
        while parent[v] is not None:
            u = parent[v]
            r = residual[(u, v)]
            if bottleneck is None or r < bottleneck:
                bottleneck = r
            v = u
        v = sink
        while parent[v] is not None:
            u = parent[v]
            residual[(u, v)] -= bottleneck
            residual[(v, u)] += bottleneck
            v = u
        total += bottleneck
    reachable = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in reachable and residual.get((u, v), 0) > 0:
                reachable.add(v)
                queue.append(v)
    return total, frozenset(reachable)


def _surplus_cut(gpi: BipartiteGraph, include: frozenset[BuyerId],
                 exclude: frozenset[BuyerId]) -> tuple[int, frozenset[BuyerId]]:
    """Minimum surplus over sets Y with include <= Y <= buyers - exclude."""
    present = [t for t in gpi.buyers if t not in exclude]
    inf = sum(gpi.capacity[t] for t in present) + len(gpi.items) + 1
    source, sink = "@source", "@sink"
    adj: dict[str, list[str]] = {source: [], sink: []}
    cap: dict[tuple[str, str], int] = {}
    for s in gpi.items:
        adj[s] = [sink]
        cap[(s, sink)] = 1
        adj[sink].append(s)
    for t in present:
        adj[source].append(t)
        adj[t] = [source]
        cap[(source, t)] = inf if t in include else gpi.capacity[t]
        for s in gpi.buyer_adj[t]:
            adj[t].append(s)
            adj[s].append(t)
            cap[(t, s)] = inf
    flow, reachable = _max_flow(adj, cap, source, sink)
    Y = frozenset(t for t in present if t in reachable)
    return flow - sum(gpi.capacity[t] for t in present), Y


def min_surplus_set(gpi: BipartiteGraph, q: SurplusQuery = SurplusQuery()
                    ) -> Optional[tuple[frozenset[BuyerId], int]]:
    """A nonempty proper buyer set minimizing |N(Y)| - b(Y) subject to q.

    Returns None when the constraints leave no candidate.  Deterministic:
    probes run in buyer input order and the first minimizer wins.
    """
    include = frozenset(q.must_include)
    exclude = frozenset(q.must_exclude)
    unknown = (include | exclude) - set(gpi.buyers)
    if unknown:
        raise ModelError(f"unknown buyers {sorted(unknown)!r}")
    if include & exclude:
        raise ModelError("must_include and must_exclude overlap")
    include_opts = [include] if include else \
        [include | {t} for t in gpi.buyers if t not in exclude]
    best: Optional[tuple[frozenset[BuyerId], int]] = None
    for inc in include_opts:
        if exclude:
            exclude_opts = [exclude]
        else:
            exclude_opts = [exclude | {t} for t in gpi.buyers if t not in inc]
        for exc in exclude_opts:
            value, Y = _surplus_cut(gpi, inc, exc)
            if best is None or value < best[1]:
                best = (Y, value)
    return best


def maximal_dangerous_set(gpi: BipartiteGraph) -> Optional[frozenset[BuyerId]]:
    """An inclusionwise maximal dangerous set, or None when min surplus >= 2.

    Precondition: no nonempty proper subset has surplus zero (Case-2 regime).
    """
    base = min_surplus_set(gpi)
    if base is None:
        return None
    Y, value = base
    if value <= 0:
        raise ContractViolationError("surplus-zero set exists; graph splits instead")
    if value >= 2:
        return None
    for t in gpi.buyers:
        if t in Y:
            continue
        probe = min_surplus_set(gpi, SurplusQuery.of(include=Y | {t}))
        if probe is not None and probe[1] == 1:
            Y = probe[0]
    return Y


def minimal_dangerous_disjoint(gpi: BipartiteGraph, Z: Iterable[BuyerId]
                               ) -> Optional[frozenset[BuyerId]]:
    """An inclusionwise minimal dangerous set disjoint from Z, or None."""
    Z = frozenset(Z)
    if not is_dangerous(gpi, Z):
        raise ContractViolationError("Z must be dangerous")
    probe = min_surplus_set(gpi, SurplusQuery.of(exclude=Z))
    if probe is None:
        return None
    Y, value = probe
    if value <= 0:
        raise ContractViolationError("surplus-zero set exists; graph splits instead")
    if value >= 2:
        return None
    buyers_all = frozenset(gpi.buyers)
    for t in gpi.buyers:
        if t not in Y or len(Y) == 1:
            continue
        outside = (buyers_all - Y) | Z | {t}
        for t_in in gpi.buyers:
            if t_in not in Y or t_in == t:
                continue
            sub = min_surplus_set(gpi, SurplusQuery.of(include={t_in}, exclude=outside))
            if sub is not None and sub[1] == 1:
                Y = sub[0]
                break
    return Y


def legal_classes_3(gpi: BipartiteGraph) -> dict[frozenset[int], frozenset[ItemId]]:
    """Partition of items by which of the three buyers they are tight for.

    Keys are subsets of {1, 2, 3} (buyer positions in input order).
    """
    if len(gpi.buyers) != 3:
        raise ContractViolationError("exactly three buyers required")
    classes: dict[frozenset[int], set[ItemId]] = {
        frozenset(c): set()
        for k in range(4) for c in combinations((1, 2, 3), k)
    }
    member = {t: i + 1 for i, t in enumerate(gpi.buyers)}
    for s in gpi.items:
        key = frozenset(member[t] for t in gpi.item_adj[s])
        classes[key].add(s)
    return {k: frozenset(v) for k, v in classes.items()}


def all_dangerous_sets(gpi: BipartiteGraph) -> list[frozenset[BuyerId]]:
    """Every dangerous set, by direct enumeration (desk scale |T| only)."""
    if len(gpi.buyers) > 16:
        raise ContractViolationError("enumeration limited to 16 buyers")
    out = []
    for k in range(1, len(gpi.buyers)):
        for combo in combinations(gpi.buyers, k):
            if surplus(gpi, combo) == 1:
                out.append(frozenset(combo))
    return out
