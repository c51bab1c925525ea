"""Adequate item orderings.

An ordering of the items is adequate for a tight graph when, for every buyer,
matching the buyer to its first b(t) tight neighbors still leaves a graph with
a b-factor.  Constructions implemented here: the two-buyer symmetric
difference rule, the three-buyer labeling, and the recursive case analysis for
bi-demand markets driven by dangerous sets.  Every recursive descent of the
bi-demand construction re-derives a fresh structured dual under unit weights
and lifts the inner ordering with `combine`, which prunes edges that lie in no
factor of the subgraph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Optional

from . import matching, sets
from .dual import refine_covering, tight_subgraph
from .errors import ContractViolationError, InternalConsistencyError, ModelError
from .matching import BipartiteGraph, BuyerId, Covering, ItemId


@dataclass(frozen=True)
class Ordering:
    """Bijection from items to ranks 1..n; rank 1 is picked up first."""

    rank: Mapping[ItemId, int]

    def __post_init__(self):
        ranks = sorted(self.rank.values())
        if ranks != list(range(1, len(self.rank) + 1)):
            raise ModelError("ordering ranks must be a bijection onto 1..n")

    @staticmethod
    def from_sequence(items: Iterable[ItemId]) -> "Ordering":
        return Ordering({s: k + 1 for k, s in enumerate(items)})

    def items_in_order(self) -> tuple[ItemId, ...]:
        return tuple(sorted(self.rank, key=self.rank.__getitem__))


@dataclass(frozen=True)
class Labeling3:
    """Item labels 1..5 for the three-buyer construction."""

    theta: Mapping[ItemId, int]


def combine(pi: Covering, sigma: Ordering) -> Ordering:
    """Pre-order by pi values non-decreasing, break ties by sigma."""
    try:
        key = {s: (pi.pi[s], sigma.rank[s]) for s in sigma.rank}
    except KeyError as exc:
        raise ModelError(f"pi not defined on item {exc}") from exc
    return Ordering.from_sequence(sorted(sigma.rank, key=key.__getitem__))


def verify_adequate(gpi: BipartiteGraph, sigma: Ordering) -> bool:
    """Check adequacy directly: every buyer's first b(t) neighbors extend to a b-factor."""
    if set(sigma.rank) != set(gpi.items):
        raise ModelError("ordering domain does not match graph items")
    for t in gpi.buyers:
        nbrs = sorted(gpi.buyer_adj[t], key=sigma.rank.__getitem__)
        if len(nbrs) < gpi.capacity[t]:
            return False
        first = nbrs[:gpi.capacity[t]]
        exists, _ = matching.bfactor_exists(gpi.without(set(first) | {t}))
        if not exists:
            return False
    return True


def _require_factor(g: BipartiteGraph, exc_type) -> None:
    exists, _ = matching.bfactor_exists(g)
    if not exists:
        raise exc_type("graph admits no b-factor")


def adequate_two_buyers(gpi: BipartiteGraph) -> Ordering:
    """Symmetric difference of the two neighborhoods first, intersection last."""
    if len(gpi.buyers) != 2:
        raise ContractViolationError("exactly two buyers required")
    t1, t2 = gpi.buyers
    if len(gpi.items) != gpi.capacity[t1] + gpi.capacity[t2]:
        raise ContractViolationError("item count must equal total demand")
    _require_factor(gpi, ContractViolationError)
    n1 = set(gpi.buyer_adj[t1])
    n2 = set(gpi.buyer_adj[t2])
    shared = n1 & n2
    seq = [s for s in gpi.items if s not in shared] + [s for s in gpi.items if s in shared]
    return Ordering.from_sequence(seq)


def three_buyer_labeling(gpi: BipartiteGraph,
                         reduced: Mapping[BuyerId, int]) -> Labeling3:
    """Labeling of the non-exclusive items given reduced demands.

    Buyers are handled in non-increasing order of reduced demand; for the
    buyer of rank i, the number of items labeled <= 4 - i inside each of its
    pair classes is exactly max(0, class size - other demand).
    """
    classes = sets.legal_classes_3(gpi)
    buyers = gpi.buyers
    r = {i + 1: reduced[buyers[i]] for i in range(3)}
    order = sorted((1, 2, 3), key=lambda a: (-r[a], a))
    rank_of = {pos: k + 1 for k, pos in enumerate(order)}
    theta: dict[ItemId, int] = {}
    for s in classes[frozenset((1, 2, 3))]:
        theta[s] = 5
    item_pos = {s: k for k, s in enumerate(gpi.items)}
    for a, b in combinations((1, 2, 3), 2):
        cls = sorted(classes[frozenset((a, b))], key=item_pos.__getitem__)
        i, j = sorted((rank_of[a], rank_of[b]))
        r_hi = r[order[i - 1]]
        r_lo = r[order[j - 1]]
        size = len(cls)
        if size > r_hi + r_lo:
            raise ContractViolationError(
                "pair class larger than combined demand; saturation or legality bug upstream")
        mid_label = 3 if (i, j) == (1, 2) else 2
        n4 = min(size, r_lo)
        nmid = max(0, min(size, r_hi) - r_lo)
        for k, s in enumerate(cls):
            theta[s] = 4 if k < n4 else (mid_label if k < n4 + nmid else 1)
    # Claim-style sanity: the items a rank-i buyer must grab fit its demand.
    for i in (1, 2, 3):
        pos = order[i - 1]
        grab = sum(1 for a, b in combinations((1, 2, 3), 2)
                   if pos in (a, b)
                   for s in classes[frozenset((a, b))] if theta[s] <= 4 - i)
        if grab > r[pos]:
            raise InternalConsistencyError("labeling overcommits a buyer")
    return Labeling3(theta)


def adequate_three_buyers(gpi: BipartiteGraph) -> Ordering:
    """Adequate ordering for at most three buyers with arbitrary demands.

    Items tight for a single buyer go first with demands reduced accordingly;
    the remaining items are ordered by the labeling.
    """
    nb = len(gpi.buyers)
    if nb > 3:
        raise ContractViolationError("at most three buyers supported")
    if len(gpi.items) != gpi.buyer_capacity_total():
        raise ContractViolationError("item count must equal total demand")
    _require_factor(gpi, ContractViolationError)
    if nb <= 1:
        return Ordering.from_sequence(gpi.items)
    if nb == 2:
        return adequate_two_buyers(gpi)

    classes = sets.legal_classes_3(gpi)
    if classes[frozenset()]:
        raise ContractViolationError("item with no tight edge")
    buyers = gpi.buyers
    exclusive: dict[BuyerId, frozenset[ItemId]] = {
        buyers[i]: classes[frozenset((i + 1,))] for i in range(3)
    }
    reduced = {}
    for t in buyers:
        reduced[t] = gpi.capacity[t] - len(exclusive[t])
        if reduced[t] < 0:
            raise ContractViolationError(
                "buyer has more exclusive items than demand; saturation bug upstream")
    head = [s for s in gpi.items if any(s in xs for xs in exclusive.values())]
    rest = [s for s in gpi.items if s not in set(head)]
    if len(rest) != sum(reduced.values()):
        raise ContractViolationError("class sizes inconsistent with demands")

    lab = three_buyer_labeling(gpi, reduced)
    item_pos = {s: k for k, s in enumerate(gpi.items)}
    rest.sort(key=lambda s: (lab.theta[s], item_pos[s]))
    ordering = Ordering.from_sequence(head + rest)

    # First-choice sets on the reduced instance leave enough for the others.
    head_set = set(head)
    for t in buyers:
        nbrs = [s for s in gpi.buyer_adj[t] if s not in head_set]
        nbrs.sort(key=ordering.rank.__getitem__)
        first = set(nbrs[:reduced[t]])
        if len(first) != reduced[t]:
            raise InternalConsistencyError("buyer short of tight neighbors")
        for t2 in buyers:
            if t2 == t:
                continue
            left = [s for s in gpi.buyer_adj[t2] if s not in head_set and s not in first]
            if len(left) < reduced[t2]:
                raise InternalConsistencyError("labeling starves another buyer")
    return ordering


def _components(g: BipartiteGraph) -> list[tuple[list[ItemId], list[BuyerId]]]:
    seen: set[str] = set()
    comps = []
    for start in g.buyers:
        if start in seen:
            continue
        queue = deque([start])
        seen.add(start)
        verts = {start}
        while queue:
            v = queue.popleft()
            nbrs = g.buyer_adj.get(v) or g.item_adj.get(v) or ()
            for w in nbrs:
                if w not in seen:
                    seen.add(w)
                    verts.add(w)
                    queue.append(w)
        comps.append(([s for s in g.items if s in verts],
                      [t for t in g.buyers if t in verts]))
    if any(s not in seen for s in g.items):
        raise InternalConsistencyError("isolated item in tight graph")
    return comps


def adequate_bidemand(h: BipartiteGraph, trace: Optional[list] = None) -> Ordering:
    """Adequate ordering for markets where every demand is at most two.

    Wrapper of the recursive case analysis: refine a structured dual of h
    under all-unit weights, restrict to its tight subgraph, run the case
    analysis there, and lift the result through `combine`.
    """
    for t in h.buyers:
        if not 1 <= h.capacity[t] <= 2:
            raise ContractViolationError("demands must be one or two")
    _require_factor(h, ContractViolationError)
    return _bidemand_wrapper(h, trace if trace is not None else [], 0)


def _bidemand_wrapper(h: BipartiteGraph, trace: list, depth: int) -> Ordering:
    _require_factor(h, InternalConsistencyError)
    unit = h.unit_weights()
    sc = refine_covering(unit)
    hp = tight_subgraph(sc, unit)
    seq = _bidemand_cases(hp, trace, depth)
    return combine(sc.pi, Ordering.from_sequence(seq))


def _bidemand_cases(hp: BipartiteGraph, trace: list, depth: int) -> list[ItemId]:
    if len(hp.buyers) <= 1:
        trace.append({"depth": depth, "case": "base", "buyers": list(hp.buyers)})
        return list(hp.items)

    comps = _components(hp)
    if len(comps) > 1:
        trace.append({"depth": depth, "case": "3",
                      "components": [sorted(ts) for _, ts in comps]})
        seq: list[ItemId] = []
        for items_c, buyers_c in comps:
            sub = hp.induced(items_c, buyers_c)
            seq.extend(_bidemand_wrapper(sub, trace, depth + 1).items_in_order())
        return seq

    found = sets.min_surplus_set(hp)
    if found is None:
        raise InternalConsistencyError("no candidate buyer subset")
    if found[1] >= 2:
        trace.append({"depth": depth, "case": "1"})
        return list(hp.items)
    if found[1] <= 0:
        raise InternalConsistencyError("connected tight graph with surplus-zero set")

    Z = sets.maximal_dangerous_set(hp)
    if Z is None:
        raise InternalConsistencyError("dangerous set vanished")
    X = sets.minimal_dangerous_disjoint(hp, Z)
    if X is None:
        return _subcase_no_disjoint(hp, Z, trace, depth)
    bad = _find_infeasible_bundle(hp, X)
    if bad is None:
        return _subcase_feasible_disjoint(hp, Z, X, trace, depth)
    return _subcase_blocking_pair(hp, Z, X, bad, trace, depth)


def _subcase_no_disjoint(hp: BipartiteGraph, Z: frozenset[BuyerId],
                         trace: list, depth: int) -> list[ItemId]:
    nz = hp.neighbors(Z)
    s0 = next((s for s in hp.items
               if s in nz and any(t not in Z for t in hp.item_adj[s])), None)
    if s0 is None:
        raise InternalConsistencyError("dangerous neighborhood fully internal")
    trace.append({"depth": depth, "case": "2.1", "Z": sorted(Z), "s0": s0})
    head = [s for s in hp.items if s not in nz]
    inner = hp.induced([s for s in hp.items if s in nz and s != s0], Z)
    middle = _bidemand_wrapper(inner, trace, depth + 1).items_in_order()
    return head + list(middle) + [s0]


def _find_infeasible_bundle(hp: BipartiteGraph, X: frozenset[BuyerId]
                            ) -> Optional[tuple[BuyerId, tuple[ItemId, ...]]]:
    for t in hp.buyers:
        if t not in X:
            continue
        for F in combinations(hp.buyer_adj[t], hp.capacity[t]):
            if not sets.feasible_bundle(hp, t, F):
                return t, F
    return None


def _subcase_feasible_disjoint(hp: BipartiteGraph, Z: frozenset[BuyerId],
                               X: frozenset[BuyerId], trace: list,
                               depth: int) -> list[ItemId]:
    nx = hp.neighbors(X)
    pick = next(((t, s) for t in hp.buyers if t not in X
                 for s in hp.buyer_adj[t] if s in nx), None)
    if pick is None:
        raise InternalConsistencyError("dangerous neighborhood fully internal")
    t0, s0 = pick
    trace.append({"depth": depth, "case": "2.2.1",
                  "Z": sorted(Z), "X": sorted(X), "s0": s0})
    outer = hp.without(X | (nx - {s0}))
    head = _bidemand_wrapper(outer, trace, depth + 1).items_in_order()
    tail = [s for s in hp.items if s in nx and s != s0]
    return list(head) + tail


def _subcase_blocking_pair(hp: BipartiteGraph, Z: frozenset[BuyerId],
                           X: frozenset[BuyerId],
                           bad: tuple[BuyerId, tuple[ItemId, ...]],
                           trace: list, depth: int) -> list[ItemId]:
    t0, F = bad
    if len(F) != 2:
        raise InternalConsistencyError("blocking bundle is not a pair")
    item_pos = {s: k for k, s in enumerate(hp.items)}
    s1, s2 = sorted(F, key=item_pos.__getitem__)
    nx = hp.neighbors(X)
    nz = hp.neighbors(Z)
    if X | Z != set(hp.buyers) or nx & nz != {s1, s2}:
        raise InternalConsistencyError("blocking pair does not split the market")
    trace.append({"depth": depth, "case": "2.2.2", "Z": sorted(Z),
                  "X": sorted(X), "pair": [s1, s2]})
    outer = hp.without(X | (nx - {s1}))
    head = _bidemand_wrapper(outer, trace, depth + 1).items_in_order()
    middle = [s for s in hp.items if s in nx and s not in (s1, s2)]
    return list(head) + middle + [s2]
