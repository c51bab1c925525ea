"""Market data model, welfare accounting, the saturation property check and
item trimming.

Markets are complete bipartite: every (buyer, item) pair carries a value, with
zero-valued pairs being real edges.  All values are exact rationals
(fractions.Fraction); nothing in the engine rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from . import matching
from .errors import InternalConsistencyError, ModelError
from .matching import BipartiteGraph, BuyerId, ItemId

Rational = Fraction


@dataclass(frozen=True)
class Market:
    """Items, buyers, per-buyer demands b(t) and per-pair values v_t(s)."""

    items: tuple[ItemId, ...]
    buyers: tuple[BuyerId, ...]
    demand: Mapping[BuyerId, int]
    value: Mapping[tuple[BuyerId, ItemId], Fraction]

    @staticmethod
    def build(items: Iterable[ItemId], buyers: Iterable[BuyerId],
              demand: Mapping[BuyerId, int],
              value: Mapping[tuple[BuyerId, ItemId], Fraction | int]) -> "Market":
        items = tuple(items)
        buyers = tuple(buyers)
        if len(set(items)) != len(items) or len(set(buyers)) != len(buyers):
            raise ModelError("duplicate ids")
        if set(items) & set(buyers):
            raise ModelError("item and buyer ids must be distinct")
        for t in buyers:
            if t not in demand or demand[t] < 1:
                raise ModelError(f"buyer {t} needs a demand >= 1")
        vals: dict[tuple[BuyerId, ItemId], Fraction] = {}
        for t in buyers:
            for s in items:
                if (t, s) not in value:
                    raise ModelError(f"missing value for buyer {t}, item {s}")
                v = Fraction(value[(t, s)])
                if v < 0:
                    raise ModelError(f"negative value for buyer {t}, item {s}")
                vals[(t, s)] = v
        return Market(items, buyers, {t: demand[t] for t in buyers}, vals)

    def total_demand(self) -> int:
        return sum(self.demand[t] for t in self.buyers)

    def values_of(self, buyer: BuyerId) -> dict[ItemId, Fraction]:
        return {s: self.value[(buyer, s)] for s in self.items}


@dataclass(frozen=True)
class Allocation:
    """Disjoint bundles, one per buyer, each within the buyer's demand."""

    bundle: Mapping[BuyerId, frozenset[ItemId]]

    @staticmethod
    def of(bundle: Mapping[BuyerId, Iterable[ItemId]]) -> "Allocation":
        return Allocation({t: frozenset(items) for t, items in bundle.items()})


@dataclass(frozen=True)
class OptReport:
    opt_welfare: Fraction
    opt_property_holds: bool
    witness: Optional[tuple[BuyerId, Allocation]] = None


def market_graph(m: Market) -> BipartiteGraph:
    """The complete edge-weighted bipartite graph of the market."""
    weight = {(s, t): m.value[(t, s)] for t in m.buyers for s in m.items}
    capacity: dict[str, int] = {s: 1 for s in m.items}
    capacity.update({t: m.demand[t] for t in m.buyers})
    return BipartiteGraph.build(m.items, m.buyers, weight, capacity)


def _validate_allocation(m: Market, a: Allocation) -> None:
    seen: set[ItemId] = set()
    items = set(m.items)
    for t, bundle in a.bundle.items():
        if t not in m.demand:
            raise ModelError(f"allocation references unknown buyer {t!r}")
        if len(bundle) > m.demand[t]:
            raise ModelError(f"bundle of {t} exceeds demand")
        for s in bundle:
            if s not in items:
                raise ModelError(f"allocation references unknown item {s!r}")
            if s in seen:
                raise ModelError(f"item {s} allocated twice")
            seen.add(s)


def welfare(m: Market, a: Allocation) -> Fraction:
    """Total value of the allocation, summed over buyers."""
    _validate_allocation(m, a)
    total = Fraction(0)
    for t, bundle in a.bundle.items():
        for s in bundle:
            total += m.value[(t, s)]
    return total


def allocation_from_matching(bm: matching.BMatching, m: Market) -> Allocation:
    out: dict[BuyerId, set[ItemId]] = {t: set() for t in m.buyers}
    for s, t in bm.edges:
        out[t].add(s)
    return Allocation.of(out)


def check_opt_property(m: Market) -> OptReport:
    """Does every buyer receive exactly b(t) items in every optimal allocation?

    Holds iff lowering any single buyer's demand by one strictly lowers the
    optimum welfare.
    """
    g = market_graph(m)
    best, opt = matching.max_weight_bmatching(g)
    for t in m.buyers:
        if m.demand[t] == 1:
            reduced = g.without([t])
        else:
            reduced = g.with_capacity(t, m.demand[t] - 1)
        wit_matching, wit_value = matching.max_weight_bmatching(reduced)
        if wit_value == opt:
            witness = allocation_from_matching(wit_matching, m)
            return OptReport(opt, False, (t, witness))
    return OptReport(opt, True, None)


def trim_items(m: Market) -> tuple[Market, frozenset[ItemId]]:
    """Drop items unused by a minimum-cardinality maximum-welfare allocation.

    The returned submarket has the same optimum welfare, and all its optima
    use every remaining item.
    """
    g = market_graph(m)
    best, opt = matching.lexicographic_min_edge_optimum(g)
    used = {s for s, _ in best.edges}
    removed = frozenset(s for s in m.items if s not in used)
    if not removed:
        return m, removed
    kept = tuple(s for s in m.items if s in used)
    sub = Market(kept, m.buyers, m.demand,
                 {(t, s): m.value[(t, s)] for t in m.buyers for s in kept})
    if matching.max_weight_value(market_graph(sub)) != opt:
        raise InternalConsistencyError("trimming changed the optimum welfare")
    return sub, removed


def restrict_market(m: Market, departed: BuyerId, sold: Iterable[ItemId]) -> Market:
    """The market after a buyer leaves with (possibly zero) sold items."""
    sold = frozenset(sold)
    if departed not in m.demand:
        raise ModelError(f"unknown buyer {departed!r}")
    unknown = sold - set(m.items)
    if unknown:
        raise ModelError(f"unknown items {sorted(unknown)!r}")
    items = tuple(s for s in m.items if s not in sold)
    buyers = tuple(t for t in m.buyers if t != departed)
    return Market(items, buyers,
                  {t: m.demand[t] for t in buyers},
                  {(t, s): m.value[(t, s)] for t in buyers for s in items})
