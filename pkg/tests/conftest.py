"""Shared fixtures and independent brute-force helpers.

The helpers here deliberately avoid the package's solver and DP oracle: plain
recursion and full enumeration only, so they can arbitrate disagreements.
"""

from fractions import Fraction
from itertools import combinations

import pytest

from dynprice import BipartiteGraph, Market


# ---------------------------------------------------------------------------
# Reference instances

@pytest.fixture
def e1() -> Market:
    # two unit-demand buyers over two items
    return Market.build(
        ["s1", "s2"], ["t1", "t2"], {"t1": 1, "t2": 1},
        {("t1", "s1"): 3, ("t1", "s2"): 1, ("t2", "s1"): 2, ("t2", "s2"): 2})


@pytest.fixture
def e2() -> Market:
    # two bi-demand buyers; unique optimum gives t1 {s1,s2}, t2 {s3,s4}
    vals = {}
    for s, v1, v2 in [("s1", 4, 3), ("s2", 4, 3), ("s3", 1, 3), ("s4", 1, 3)]:
        vals[("t1", s)] = v1
        vals[("t2", s)] = v2
    return Market.build(["s1", "s2", "s3", "s4"], ["t1", "t2"],
                        {"t1": 2, "t2": 2}, vals)


D1_NEIGHBORS = {
    "t1": ("s1", "s2", "s3"),
    "t2": ("s2", "s3", "s4", "s5", "s6"),
    "t3": ("s4", "s5", "s6"),
}
D1_ITEMS = ("s1", "s2", "s3", "s4", "s5", "s6")


@pytest.fixture
def d1_graph() -> BipartiteGraph:
    # bi-demand tight graph with dangerous sets {t1}, {t3}, {t2,t3}
    weight = {(s, t): Fraction(1) for t, ss in D1_NEIGHBORS.items() for s in ss}
    cap = {s: 1 for s in D1_ITEMS}
    cap.update({t: 2 for t in D1_NEIGHBORS})
    return BipartiteGraph.build(D1_ITEMS, tuple(D1_NEIGHBORS), weight, cap)


@pytest.fixture
def d1_market() -> Market:
    vals = {(t, s): Fraction(1 if s in D1_NEIGHBORS[t] else 0)
            for t in D1_NEIGHBORS for s in D1_ITEMS}
    return Market.build(D1_ITEMS, tuple(D1_NEIGHBORS), {t: 2 for t in D1_NEIGHBORS}, vals)


def figure_market() -> Market:
    """Three bi-demand buyers, six items, exactly two optimal allocations:
    M1 = t1{s1,s3} t2{s2,s5} t3{s4,s6} and M2 = t1{s1,s4} t2{s2,s3} t3{s5,s6}.
    """
    pos = {("t1", "s1"): 4, ("t1", "s3"): 2, ("t1", "s4"): 2,
           ("t2", "s2"): 4, ("t2", "s3"): 2, ("t2", "s5"): 2,
           ("t3", "s6"): 4, ("t3", "s4"): 2, ("t3", "s5"): 2}
    items = ["s1", "s2", "s3", "s4", "s5", "s6"]
    buyers = ["t1", "t2", "t3"]
    vals = {(t, s): Fraction(pos.get((t, s), 0)) for t in buyers for s in items}
    return Market.build(items, buyers, {t: 2 for t in buyers}, vals)


@pytest.fixture
def fig1() -> Market:
    return figure_market()


# ---------------------------------------------------------------------------
# Independent brute force (no solver, no DP)

def naive_opt_value(m: Market) -> Fraction:
    """Plain recursion over item assignments; exponential, tiny inputs only."""
    items, buyers = m.items, m.buyers

    def rec(i, caps):
        if i == len(items):
            return Fraction(0)
        best = rec(i + 1, caps)
        for j, t in enumerate(buyers):
            if caps[j]:
                cand = m.value[(t, items[i])] + rec(
                    i + 1, caps[:j] + (caps[j] - 1,) + caps[j + 1:])
                if cand > best:
                    best = cand
        return best

    return rec(0, tuple(m.demand[t] for t in buyers))


def brute_bfactor_exists(g: BipartiteGraph) -> bool:
    """Backtracking search for a b-factor: every item assigned, caps met exactly."""
    if len(g.items) != sum(g.capacity[t] for t in g.buyers):
        return False
    caps = {t: g.capacity[t] for t in g.buyers}

    def rec(i):
        if i == len(g.items):
            return all(c == 0 for c in caps.values())
        s = g.items[i]
        for t in g.item_adj[s]:
            if caps[t] > 0:
                caps[t] -= 1
                if rec(i + 1):
                    caps[t] += 1
                    return True
                caps[t] += 1
        return False

    return rec(0)


def brute_feasible(g: BipartiteGraph, t, F) -> bool:
    return brute_bfactor_exists(g.without(frozenset(F) | {t}))


def brute_verify_adequate(g: BipartiteGraph, sigma) -> bool:
    for t in g.buyers:
        nbrs = sorted(g.buyer_adj[t], key=sigma.rank.__getitem__)
        if len(nbrs) < g.capacity[t]:
            return False
        if not brute_feasible(g, t, nbrs[:g.capacity[t]]):
            return False
    return True


def brute_min_surplus(g: BipartiteGraph, include=frozenset(), exclude=frozenset()):
    """(min surplus, all minimizers) over nonempty proper subsets honoring the query."""
    best = None
    argmin = []
    pool = [t for t in g.buyers if t not in exclude]
    for k in range(1, len(g.buyers)):
        for combo in combinations(pool, k):
            Y = frozenset(combo)
            if not include <= Y:
                continue
            val = len(g.neighbors(Y)) - sum(g.capacity[t] for t in Y)
            if best is None or val < best:
                best = val
                argmin = [Y]
            elif val == best:
                argmin.append(Y)
    return best, argmin


def brute_dangerous_sets(g: BipartiteGraph) -> list[frozenset]:
    out = []
    for k in range(1, len(g.buyers)):
        for combo in combinations(g.buyers, k):
            Y = frozenset(combo)
            if len(g.neighbors(Y)) == sum(g.capacity[t] for t in Y) + 1:
                out.append(Y)
    return out
