"""Buyer behavior, dynamic-run drivers with adversarial tie exploration, and
the brute-force oracles.

The oracle is an exhaustive dynamic program over items with per-buyer residual
capacities; it is independent of the matching solver and of LP duality, and
backs every derived expected value in the test suite.

`run_exhaustive` explores every arrival order and, at each step, every
utility-maximizing bundle.  Prices depend only on the residual market, so
states are memoized on (remaining buyers, remaining items); the run count
still reflects all distinct order/tie-break combinations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Optional, Sequence

from .errors import (ContractViolationError, InternalConsistencyError, ModelError,
                     OracleCapError, UnsupportedMarketError)
from .matching import BuyerId, ItemId
from .model import Allocation, Market, restrict_market
from .pricing import (OrderingStrategy, PriceVector, RoundPricing, multi_round,
                      unit_round)

ORACLE_ITEM_CAP = 12


# ---------------------------------------------------------------------------
# Brute-force oracle


class _Oracle:
    """Exhaustive welfare DP over item-to-buyer assignments."""

    def __init__(self, m: Market, cap: int = ORACLE_ITEM_CAP):
        if len(m.items) > cap:
            raise OracleCapError(f"oracle limited to {cap} items")
        self.m = m
        self.items = m.items
        self.buyers = m.buyers
        self.start = tuple(m.demand[t] for t in m.buyers)
        self._memo: dict[tuple[int, tuple[int, ...]], Fraction] = {}

    def best_from(self, i: int, caps: tuple[int, ...]) -> Fraction:
        if i == len(self.items):
            return Fraction(0)
        key = (i, caps)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        s = self.items[i]
        best = self.best_from(i + 1, caps)  # leave s unallocated
        for j, t in enumerate(self.buyers):
            if caps[j] > 0:
                nxt = caps[:j] + (caps[j] - 1,) + caps[j + 1:]
                cand = self.m.value[(t, s)] + self.best_from(i + 1, nxt)
                if cand > best:
                    best = cand
        self._memo[key] = best
        return best

    def opt(self, caps: Optional[tuple[int, ...]] = None) -> Fraction:
        return self.best_from(0, self.start if caps is None else caps)

    def forward(self) -> list[dict[tuple[int, ...], Fraction]]:
        """reachable capacity vectors before item i -> best prefix welfare."""
        layers: list[dict[tuple[int, ...], Fraction]] = [{self.start: Fraction(0)}]
        for i, s in enumerate(self.items):
            nxt: dict[tuple[int, ...], Fraction] = {}

            def relax(caps, val):
                if caps not in nxt or val > nxt[caps]:
                    nxt[caps] = val

            for caps, val in layers[i].items():
                relax(caps, val)
                for j, t in enumerate(self.buyers):
                    if caps[j] > 0:
                        relax(caps[:j] + (caps[j] - 1,) + caps[j + 1:],
                              val + self.m.value[(t, s)])
            layers.append(nxt)
        return layers

    def enumerate_optima(self, limit: int = 500000) -> list[Allocation]:
        opt = self.opt()
        out: list[Allocation] = []
        assign: dict[BuyerId, set[ItemId]] = {t: set() for t in self.buyers}

        def walk(i: int, caps: tuple[int, ...], acc: Fraction) -> None:
            if len(out) >= limit:
                raise OracleCapError("too many optimal allocations to enumerate")
            if i == len(self.items):
                out.append(Allocation.of({t: set(v) for t, v in assign.items()}))
                return
            s = self.items[i]
            if acc + self.best_from(i + 1, caps) == opt:
                walk(i + 1, caps, acc)
            for j, t in enumerate(self.buyers):
                if caps[j] > 0:
                    nxt = caps[:j] + (caps[j] - 1,) + caps[j + 1:]
                    v2 = acc + self.m.value[(t, s)]
                    if v2 + self.best_from(i + 1, nxt) == opt:
                        assign[t].add(s)
                        walk(i + 1, nxt, v2)
                        assign[t].remove(s)

        walk(0, self.start, Fraction(0))
        return out


def oracle_opt_value(m: Market, cap: int = ORACLE_ITEM_CAP) -> Fraction:
    return _Oracle(m, cap).opt()


def oracle_opt(m: Market, cap: int = ORACLE_ITEM_CAP) -> tuple[Fraction, tuple[Allocation, ...]]:
    """Exhaustive optimum welfare and the complete set of optimal allocations."""
    oracle = _Oracle(m, cap)
    return oracle.opt(), tuple(oracle.enumerate_optima())


def oracle_edge_legal(m: Market, s: ItemId, t: BuyerId, cap: int = ORACLE_ITEM_CAP) -> bool:
    """Is item s given to buyer t in some optimal allocation (oracle route)?"""
    oracle = _Oracle(m, cap)
    opt = oracle.opt()
    layers = oracle.forward()
    i = m.items.index(s)
    j = m.buyers.index(t)
    for caps, val in layers[i].items():
        if caps[j] > 0:
            nxt = caps[:j] + (caps[j] - 1,) + caps[j + 1:]
            if val + m.value[(t, s)] + oracle.best_from(i + 1, nxt) == opt:
                return True
    return False


def oracle_buyer_sometimes_short(m: Market, t: BuyerId, cap: int = ORACLE_ITEM_CAP) -> bool:
    """Does some optimal allocation give t fewer than b(t) items?"""
    oracle = _Oracle(m, cap)
    j = m.buyers.index(t)
    caps = oracle.start[:j] + (oracle.start[j] - 1,) + oracle.start[j + 1:]
    return oracle.opt(caps) == oracle.opt()


def oracle_item_sometimes_unused(m: Market, s: ItemId, cap: int = ORACLE_ITEM_CAP) -> bool:
    oracle = _Oracle(m, cap)
    opt = oracle.opt()
    layers = oracle.forward()
    i = m.items.index(s)
    return any(val + oracle.best_from(i + 1, caps) == opt
               for caps, val in layers[i].items())


def oracle_feasible(m: Market, t: BuyerId, F: Iterable[ItemId],
                    cap: int = ORACLE_ITEM_CAP) -> bool:
    """Does some optimal allocation give t exactly the bundle F?"""
    F = frozenset(F)
    if len(F) > m.demand[t]:
        return False
    bundle_value = sum((m.value[(t, s)] for s in F), Fraction(0))
    rest = restrict_market(m, t, F)
    return bundle_value + oracle_opt_value(rest, cap) == oracle_opt_value(m, cap)


# ---------------------------------------------------------------------------
# Buyer behavior


def best_bundles(m: Market, t: BuyerId, p: PriceVector) -> list[frozenset[ItemId]]:
    """All utility-maximizing bundles of size at most b(t), in canonical order.

    Items with negative margin never help, so enumeration runs over the
    non-negative-margin candidates only; zero-margin items generate the
    zero-utility padding freedom, and the empty bundle appears whenever zero
    utility is maximal.
    """
    if t not in m.demand:
        raise ModelError(f"unknown buyer {t!r}")
    margin = {s: m.value[(t, s)] - p.price[s] for s in m.items}
    cands = [s for s in m.items if margin[s] >= 0]
    if len(cands) > 22:
        raise ContractViolationError("bundle enumeration beyond desk scale")
    best = Fraction(0)
    out: list[frozenset[ItemId]] = []
    for k in range(0, min(m.demand[t], len(cands)) + 1):
        for combo in combinations(cands, k):
            u = sum((margin[s] for s in combo), Fraction(0))
            if u > best:
                best = u
                out = [frozenset(combo)]
            elif u == best:
                out.append(frozenset(combo))
    return out


# ---------------------------------------------------------------------------
# Dynamic runs


@dataclass(frozen=True)
class Step:
    buyer: BuyerId
    prices: PriceVector
    bundle: frozenset[ItemId]
    paid: Fraction
    trimmed_away: frozenset[ItemId]


@dataclass(frozen=True)
class RunTrace:
    steps: tuple[Step, ...]
    final_welfare: Fraction
    leftover_items: frozenset[ItemId]


@dataclass(frozen=True)
class Verdict:
    instance_id: str
    runs_checked: int
    all_optimal: bool
    counterexample: Optional[RunTrace]
    complete: bool
    optimum: Fraction


TieBreak = Callable[[BuyerId, Sequence[frozenset[ItemId]], int], frozenset[ItemId]]


def _infer_mode(m: Market) -> str:
    return "unit" if all(m.demand[t] == 1 for t in m.buyers) else "multi"


def _prohibitive_round(m: Market) -> RoundPricing:
    """Everything priced out of reach; used only when a sabotaged run breaks
    the saturation property mid-run and still has to finish."""
    from .matching import Covering
    from .pricing import prohibitive_price
    price = {s: prohibitive_price(m, s) for s in m.items}
    zeros = Covering({v: Fraction(0) for v in m.items + m.buyers})
    return RoundPricing(PriceVector(price, Fraction(0)), zeros, None, m,
                        frozenset(m.items))


def _price_round(m: Market, mode: str,
                 ordering_strategy: Optional[OrderingStrategy],
                 is_root: bool = True) -> RoundPricing:
    try:
        if mode == "unit":
            return unit_round(m)
        if mode == "multi":
            return multi_round(m, ordering_strategy)
    except UnsupportedMarketError as exc:
        if is_root:
            raise
        if ordering_strategy is None:
            raise InternalConsistencyError(
                "residual market lost the saturation property mid-run") from exc
        return _prohibitive_round(m)
    raise ModelError(f"unknown mode {mode!r}")


def run_once(m: Market, order: Sequence[BuyerId], tiebreak: Optional[TieBreak] = None,
             mode: Optional[str] = None,
             ordering_strategy: Optional[OrderingStrategy] = None) -> RunTrace:
    """One dynamic run: price, let the arriving buyer pick, shrink the market."""
    if sorted(order) != sorted(m.buyers):
        raise ModelError("order must be a permutation of the buyers")
    mode = mode or _infer_mode(m)
    residual = m
    steps: list[Step] = []
    welfare_total = Fraction(0)
    for k, t in enumerate(order):
        rp = _price_round(residual, mode, ordering_strategy, is_root=(k == 0))
        bundles = best_bundles(residual, t, rp.prices)
        if mode == "multi" and len(bundles) != 1:
            raise InternalConsistencyError("multi-demand prices must pin a unique bundle")
        choice = bundles[0] if tiebreak is None else tiebreak(t, bundles, len(steps))
        if choice not in bundles:
            raise ModelError("tiebreak selected a non-maximizing bundle")
        paid = sum((rp.prices.price[s] for s in choice), Fraction(0))
        welfare_total += sum((residual.value[(t, s)] for s in choice), Fraction(0))
        steps.append(Step(t, rp.prices, choice, paid, rp.removed))
        residual = restrict_market(residual, t, choice)
    return RunTrace(tuple(steps), welfare_total, frozenset(residual.items))


class _BudgetExceeded(Exception):
    pass


def _submarket(m: Market, items: frozenset[ItemId], buyers: frozenset[BuyerId]) -> Market:
    its = tuple(s for s in m.items if s in items)
    bys = tuple(t for t in m.buyers if t in buyers)
    return Market(its, bys, {t: m.demand[t] for t in bys},
                  {(t, s): m.value[(t, s)] for t in bys for s in its})


def run_exhaustive(m: Market, mode: Optional[str] = None, budget: int = 200000,
                   ordering_strategy: Optional[OrderingStrategy] = None,
                   instance_id: str = "", oracle_cap: int = ORACLE_ITEM_CAP) -> Verdict:
    """DFS over every arrival order and every tie-break; verdict against the oracle.

    Exceeding the state budget yields an explicit partial verdict
    (complete=False, no counterexample trace) rather than silent truncation.
    """
    mode = mode or _infer_mode(m)
    opt_value = oracle_opt_value(m, oracle_cap)
    price_cache: dict[tuple, RoundPricing] = {}
    memo: dict[tuple, tuple[Fraction, Fraction, int]] = {}
    expansions = 0
    runs_walked = 0
    violation_seen = False

    def price_state(items: frozenset[ItemId], buyers: frozenset[BuyerId]) -> RoundPricing:
        key = (buyers, items)
        hit = price_cache.get(key)
        if hit is None:
            root = buyers == frozenset(m.buyers) and items == frozenset(m.items)
            hit = _price_round(_submarket(m, items, buyers), mode, ordering_strategy,
                               is_root=root)
            price_cache[key] = hit
        return hit

    def explore(items: frozenset[ItemId], buyers: frozenset[BuyerId], acc: Fraction
                ) -> tuple[Fraction, Fraction, int]:
        nonlocal expansions, runs_walked, violation_seen
        if not buyers:
            runs_walked += 1
            if acc != opt_value:
                violation_seen = True
            return Fraction(0), Fraction(0), 1
        key = (buyers, items)
        hit = memo.get(key)
        if hit is not None:
            if acc + hit[0] != opt_value:
                violation_seen = True
            return hit
        expansions += 1
        if expansions > budget:
            raise _BudgetExceeded
        residual = _submarket(m, items, buyers)
        rp = price_state(items, buyers)
        mn = mx = None
        count = 0
        for t in residual.buyers:
            bundles = best_bundles(residual, t, rp.prices)
            if mode == "multi" and len(bundles) != 1:
                raise InternalConsistencyError("multi-demand prices must pin a unique bundle")
            for bundle in bundles:
                gain = sum((residual.value[(t, s)] for s in bundle), Fraction(0))
                sub_mn, sub_mx, sub_n = explore(items - bundle, buyers - {t}, acc + gain)
                lo, hi = gain + sub_mn, gain + sub_mx
                mn = lo if mn is None or lo < mn else mn
                mx = hi if mx is None or hi > mx else mx
                count += sub_n
        memo[key] = (mn, mx, count)
        return memo[key]

    items0 = frozenset(m.items)
    buyers0 = frozenset(m.buyers)
    try:
        mn, mx, count = explore(items0, buyers0, Fraction(0))
    except _BudgetExceeded:
        # Partial verdict: runs_walked is a lower bound on verified runs.
        return Verdict(instance_id, runs_walked, not violation_seen, None, False, opt_value)
    if mx > opt_value:
        raise InternalConsistencyError("a run exceeded the oracle optimum")
    all_optimal = mn == opt_value
    counterexample = None
    if not all_optimal:
        counterexample = _walk_min_trace(m, mode, memo, price_state, ordering_strategy)
    return Verdict(instance_id, count, all_optimal, counterexample, True, opt_value)


def _walk_min_trace(m: Market, mode: str, memo, price_state,
                    ordering_strategy) -> RunTrace:
    """Reconstruct one minimum-welfare run from the memo table."""
    items = frozenset(m.items)
    buyers = frozenset(m.buyers)
    steps: list[Step] = []
    total = Fraction(0)
    while buyers:
        residual = _submarket(m, items, buyers)
        rp = price_state(items, buyers)
        target = memo[(buyers, items)][0]
        found = None
        for t in residual.buyers:
            for bundle in best_bundles(residual, t, rp.prices):
                gain = sum((residual.value[(t, s)] for s in bundle), Fraction(0))
                child = (buyers - {t}, items - bundle)
                child_mn = memo[child][0] if child[0] else Fraction(0)
                if gain + child_mn == target:
                    found = (t, bundle, gain)
                    break
            if found:
                break
        if found is None:
            raise InternalConsistencyError("trace reconstruction lost the minimum path")
        t, bundle, gain = found
        paid = sum((rp.prices.price[s] for s in bundle), Fraction(0))
        steps.append(Step(t, rp.prices, bundle, paid, rp.removed))
        total += gain
        items -= bundle
        buyers -= {t}
    return RunTrace(tuple(steps), total, items)


def reversed_ordering_strategy(trimmed: Market, gpi, sc) -> "Ordering":
    """Negative control: the standard adequate ordering, reversed."""
    from .orderings import Ordering
    from .pricing import dispatch_ordering
    base = dispatch_ordering(trimmed, gpi, sc)
    return Ordering.from_sequence(tuple(reversed(base.items_in_order())))


def run_sampled(m: Market, n_orders: int, seed: int, mode: Optional[str] = None,
                ordering_strategy: Optional[OrderingStrategy] = None,
                instance_id: str = "", oracle_cap: int = ORACLE_ITEM_CAP) -> Verdict:
    """Seeded random arrival orders and tie-breaks; complete is always False."""
    mode = mode or _infer_mode(m)
    opt_value = oracle_opt_value(m, oracle_cap)
    rng = random.Random(seed)
    counterexample = None
    for _ in range(n_orders):
        order = list(m.buyers)
        rng.shuffle(order)
        trace = run_once(m, order, tiebreak=lambda t, bs, i: rng.choice(bs),
                         mode=mode, ordering_strategy=ordering_strategy)
        if trace.final_welfare != opt_value and counterexample is None:
            counterexample = trace
    return Verdict(instance_id, n_orders, counterexample is None, counterexample,
                   False, opt_value)
