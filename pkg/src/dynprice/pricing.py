"""One round of posted prices from a structured covering and an adequate ordering.

Multi-demand prices are pi(s) + delta * sigma(s) with delta = slack/(|S|+1);
unit-demand prices are pi itself.  Both variants trim the market first and
price trimmed-away items prohibitively so no buyer ever takes them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional

from .dual import StructuredCovering, refine_covering, tight_subgraph
from .errors import ContractViolationError, InternalConsistencyError, UnsupportedMarketError
from .matching import BipartiteGraph, Covering, ItemId
from .model import Market, market_graph, trim_items
from .orderings import Ordering, adequate_bidemand, adequate_three_buyers

OrderingStrategy = Callable[[Market, BipartiteGraph, StructuredCovering], Ordering]


@dataclass(frozen=True)
class PriceVector:
    """Posted price per item; delta is the ordering increment (0 for unit mode)."""

    price: Mapping[ItemId, Fraction]
    delta: Fraction


@dataclass(frozen=True)
class RoundPricing:
    """Full pricing context for one round (CLI and simulation consume this)."""

    prices: PriceVector
    pi: Covering
    sigma: Optional[Ordering]
    trimmed: Market
    removed: frozenset[ItemId]


def prohibitive_price(m: Market, s: ItemId) -> Fraction:
    """Strictly above every remaining buyer's value, so s never gets taken."""
    top = max((m.value[(t, s)] for t in m.buyers), default=Fraction(0))
    return top + 1


def dispatch_ordering(trimmed: Market, gpi: BipartiteGraph,
                      sc: StructuredCovering) -> Ordering:
    if len(trimmed.buyers) <= 3:
        return adequate_three_buyers(gpi)
    if all(trimmed.demand[t] <= 2 for t in trimmed.buyers):
        return adequate_bidemand(gpi)
    raise UnsupportedMarketError(
        "no adequate-ordering construction for >3 buyers with demands above two")


def unit_round(m: Market) -> RoundPricing:
    """Unit-demand round: prices are the structured dual restricted to items."""
    if any(m.demand[t] != 1 for t in m.buyers):
        raise ContractViolationError("unit pricing requires all demands equal to one")
    trimmed, removed = trim_items(m)
    sc = refine_covering(market_graph(trimmed))
    price = {s: sc.pi.pi[s] for s in trimmed.items}
    price.update({s: prohibitive_price(m, s) for s in removed})
    return RoundPricing(PriceVector(price, Fraction(0)), sc.pi, None, trimmed, removed)


def multi_round(m: Market, ordering_strategy: Optional[OrderingStrategy] = None
                ) -> RoundPricing:
    """Multi-demand round; refuses markets where some buyer can be left short."""
    trimmed, removed = trim_items(m)
    if len(trimmed.items) != trimmed.total_demand():
        raise UnsupportedMarketError(
            "saturation property fails: optimum leaves a buyer short of b(t) items")
    g = market_graph(trimmed)
    sc = refine_covering(g)
    for t in trimmed.buyers:
        if sc.pi.pi[t] == 0:
            raise UnsupportedMarketError(
                "saturation property fails: optimum leaves a buyer short of b(t) items")
    for s in trimmed.items:
        if sc.pi.pi[s] == 0:
            raise InternalConsistencyError("trimmed item with zero dual")
    gpi = tight_subgraph(sc, g)
    strategy = ordering_strategy or dispatch_ordering
    sigma = strategy(trimmed, gpi, sc)
    if sc.slack is None:
        raise InternalConsistencyError("finite slack expected under saturation")
    delta = sc.slack / (len(trimmed.items) + 1)
    price = {s: sc.pi.pi[s] + delta * sigma.rank[s] for s in trimmed.items}
    price.update({s: prohibitive_price(m, s) for s in removed})
    return RoundPricing(PriceVector(price, delta), sc.pi, sigma, trimmed, removed)


def round_prices_unit(m: Market) -> PriceVector:
    return unit_round(m).prices


def round_prices_multi(m: Market) -> PriceVector:
    return multi_round(m).prices
