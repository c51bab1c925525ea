"""Exact maximum-weight b-matching on bipartite graphs with optimal dual coverings.

The solver works on the buyer-copy expansion: every buyer vertex t with
capacity b(t) becomes b(t) unit-capacity copies, items keep capacity one, and
a rectangular Hungarian algorithm with potentials solves the resulting
assignment problem exactly.  The potentials translate directly into an optimal
non-negative weighted covering pi with pi . b equal to the optimum, and copies
of the same buyer provably share one dual value.

All arithmetic is exact.  Weights are fractions.Fraction (or any ordered
additive value type such as LexWeight, used for lexicographic objectives);
Fraction inputs are scaled to integers internally for speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional

from .errors import InternalConsistencyError, ModelError

ItemId = str
BuyerId = str
Edge = tuple[ItemId, BuyerId]


@dataclass(frozen=True)
class BipartiteGraph:
    """Edge-weighted bipartite graph with vertex capacities (items always 1)."""

    items: tuple[ItemId, ...]
    buyers: tuple[BuyerId, ...]
    edges: tuple[Edge, ...]
    weight: Mapping[Edge, Fraction]
    capacity: Mapping[str, int]

    @staticmethod
    def build(items: Iterable[ItemId], buyers: Iterable[BuyerId],
              weight: Mapping[Edge, Fraction | int],
              capacity: Mapping[str, int],
              edges: Optional[Iterable[Edge]] = None) -> "BipartiteGraph":
        items = tuple(items)
        buyers = tuple(buyers)
        if len(set(items)) != len(items) or len(set(buyers)) != len(buyers):
            raise ModelError("duplicate vertex ids")
        if set(items) & set(buyers):
            raise ModelError("item and buyer ids must be distinct")
        if edges is None:
            edges = weight.keys()
        item_pos = {s: k for k, s in enumerate(items)}
        buyer_pos = {t: k for k, t in enumerate(buyers)}
        try:
            canon = tuple(sorted(set(edges), key=lambda e: (item_pos[e[0]], buyer_pos[e[1]])))
        except KeyError as exc:
            raise ModelError(f"edge references unknown vertex {exc}") from exc
        w = {e: Fraction(weight[e]) for e in canon}
        cap = dict(capacity)
        for s in items:
            if cap.get(s, 1) != 1:
                raise ModelError(f"item {s} must have capacity 1")
            cap[s] = 1
        for t in buyers:
            c = cap.get(t)
            if c is None or c < 0:
                raise ModelError(f"buyer {t} needs a non-negative capacity")
        return BipartiteGraph(items, buyers, canon, w, cap)

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    @cached_property
    def buyer_adj(self) -> dict[BuyerId, tuple[ItemId, ...]]:
        adj: dict[BuyerId, list[ItemId]] = {t: [] for t in self.buyers}
        for s, t in self.edges:
            adj[t].append(s)
        order = {s: k for k, s in enumerate(self.items)}
        return {t: tuple(sorted(v, key=order.__getitem__)) for t, v in adj.items()}

    @cached_property
    def item_adj(self) -> dict[ItemId, tuple[BuyerId, ...]]:
        adj: dict[ItemId, list[BuyerId]] = {s: [] for s in self.items}
        for s, t in self.edges:
            adj[s].append(t)
        order = {t: k for k, t in enumerate(self.buyers)}
        return {s: tuple(sorted(v, key=order.__getitem__)) for s, v in adj.items()}

    def neighbors(self, buyers: Iterable[BuyerId]) -> frozenset[ItemId]:
        out: set[ItemId] = set()
        for t in buyers:
            out.update(self.buyer_adj[t])
        return frozenset(out)

    def buyer_capacity_total(self) -> int:
        return sum(self.capacity[t] for t in self.buyers)

    def with_weights(self, weight: Mapping[Edge, Fraction]) -> "BipartiteGraph":
        return BipartiteGraph(self.items, self.buyers, self.edges, dict(weight), self.capacity)

    def unit_weights(self) -> "BipartiteGraph":
        return self.with_weights({e: Fraction(1) for e in self.edges})

    def induced(self, items: Iterable[ItemId], buyers: Iterable[BuyerId]) -> "BipartiteGraph":
        keep_s = set(items)
        keep_t = set(buyers)
        new_items = tuple(s for s in self.items if s in keep_s)
        new_buyers = tuple(t for t in self.buyers if t in keep_t)
        new_edges = tuple(e for e in self.edges if e[0] in keep_s and e[1] in keep_t)
        w = {e: self.weight[e] for e in new_edges}
        cap = {v: self.capacity[v] for v in new_items + new_buyers}
        return BipartiteGraph(new_items, new_buyers, new_edges, w, cap)

    def without(self, vertices: Iterable[str]) -> "BipartiteGraph":
        drop = set(vertices)
        return self.induced((s for s in self.items if s not in drop),
                            (t for t in self.buyers if t not in drop))

    def with_capacity(self, vertex: str, cap: int) -> "BipartiteGraph":
        if vertex not in self.capacity:
            raise ModelError(f"unknown vertex {vertex!r}")
        new_cap = dict(self.capacity)
        new_cap[vertex] = cap
        return BipartiteGraph(self.items, self.buyers, self.edges, self.weight, new_cap)


@dataclass(frozen=True)
class BMatching:
    """Edge set with every vertex degree at most its capacity."""

    edges: frozenset[Edge]

    def degree(self, vertex: str) -> int:
        return sum(1 for e in self.edges if vertex in e)

    def bundle(self, buyer: BuyerId) -> frozenset[ItemId]:
        return frozenset(s for s, t in self.edges if t == buyer)

    def weight(self, g: BipartiteGraph) -> Fraction:
        return sum((g.weight[e] for e in self.edges), Fraction(0))


@dataclass(frozen=True)
class Covering:
    """Non-negative dual vector pi with pi(s) + pi(t) >= w(st) on every edge."""

    pi: Mapping[str, Fraction]

    def total_value(self, g: BipartiteGraph) -> Fraction:
        return sum((self.pi[v] * g.capacity[v] for v in g.items + g.buyers), Fraction(0))

    def is_covering(self, g: BipartiteGraph) -> bool:
        return all(self.pi[s] + self.pi[t] >= g.weight[(s, t)] for s, t in g.edges)

    def tight_edges(self, g: BipartiteGraph) -> frozenset[Edge]:
        return frozenset(e for e in g.edges if self.pi[e[0]] + self.pi[e[1]] == g.weight[e])


@dataclass(frozen=True)
class LexWeight:
    """Pair (weight, tiebreak) ordered lexicographically; supports +, -, min.

    Used for the maximize-weight-then-minimize-edge-count objective without
    scaling weights into a single number.
    """

    w: Fraction
    tie: int

    def __add__(self, other: "LexWeight") -> "LexWeight":
        return LexWeight(self.w + other.w, self.tie + other.tie)

    def __sub__(self, other: "LexWeight") -> "LexWeight":
        return LexWeight(self.w - other.w, self.tie - other.tie)

    def __mul__(self, k: int) -> "LexWeight":
        return LexWeight(self.w * k, self.tie * k)

    def __lt__(self, other: "LexWeight") -> bool:
        return (self.w, self.tie) < (other.w, other.tie)

    def __le__(self, other: "LexWeight") -> bool:
        return (self.w, self.tie) <= (other.w, other.tie)

    @staticmethod
    def zero() -> "LexWeight":
        return LexWeight(Fraction(0), 0)


@dataclass(frozen=True)
class SolveResult:
    matching: BMatching
    value: Fraction
    covering: Covering


def _hungarian(n_rows: int, n_cols: int, adj: list[list[tuple[int, object]]], zero):
    """Row-perfect max-weight assignment with one zero-weight dummy column per row.

    Returns (match_row, u, v) where match_row[i] is the real column matched to
    row i or -1 (row absorbed by a dummy), and (u, v) are non-negative
    potentials forming an optimal covering: u[i] + v[j] >= w(i, j) on real
    edges, tight on matched edges, v = 0 on unmatched real columns, u = 0 on
    dummy-matched rows.
    """
    total_cols = n_cols + n_rows  # dummies occupy indices n_cols..
    u = []
    for i in range(n_rows):
        best = zero
        for _, w in adj[i]:
            if best < w:
                best = w
        u.append(best)
    v = [zero] * total_cols
    match_row = [-1] * n_rows         # row -> col (real or dummy)
    match_col = [-1] * total_cols     # col -> row

    for root in range(n_rows):
        slack_val: list[object] = [None] * total_cols
        slack_row = [-1] * total_cols
        in_tree_col = [False] * total_cols
        tree_rows = [root]

        def add_row(i: int) -> None:
            ui = u[i]
            for j, w in adj[i]:
                if in_tree_col[j]:
                    continue
                s = ui + v[j] - w
                if slack_val[j] is None or s < slack_val[j]:
                    slack_val[j] = s
                    slack_row[j] = i
            for j in range(n_cols, total_cols):
                if in_tree_col[j]:
                    continue
                s = ui + v[j]
                if slack_val[j] is None or s < slack_val[j]:
                    slack_val[j] = s
                    slack_row[j] = i

        add_row(root)
        while True:
            theta = None
            j_star = -1
            for j in range(total_cols):
                if in_tree_col[j] or slack_val[j] is None:
                    continue
                if theta is None or slack_val[j] < theta:
                    theta = slack_val[j]
                    j_star = j
            if theta is None:
                raise InternalConsistencyError("hungarian search stalled")
            if zero < theta:
                for i in tree_rows:
                    u[i] = u[i] - theta
                for j in range(total_cols):
                    if in_tree_col[j]:
                        v[j] = v[j] + theta
                    elif slack_val[j] is not None:
                        slack_val[j] = slack_val[j] - theta
            mate = match_col[j_star]
            if mate == -1:
                j = j_star
                while True:
                    i = slack_row[j]
                    prev = match_row[i]
                    match_row[i] = j
                    match_col[j] = i
                    if i == root:
                        break
                    j = prev
                break
            in_tree_col[j_star] = True
            tree_rows.append(mate)
            add_row(mate)

    for i in range(n_rows):
        if match_row[i] >= n_cols:
            match_row[i] = -1
    return match_row, u, v


def _solve(g: BipartiteGraph, weights: Optional[Mapping[Edge, object]] = None,
           zero=Fraction(0), want_dual: bool = True):
    """Solve max-weight b-matching via buyer-copy expansion.

    Returns (edges, value, pi_or_None); value is in the weight domain.
    """
    w = g.weight if weights is None else weights
    rows: list[BuyerId] = []
    row_of_buyer: dict[BuyerId, list[int]] = {}
    for t in g.buyers:
        row_of_buyer[t] = []
        for _ in range(g.capacity[t]):
            row_of_buyer[t].append(len(rows))
            rows.append(t)
    col_of_item = {s: k for k, s in enumerate(g.items)}

    use_int = zero == Fraction(0) and all(isinstance(x, (Fraction, int)) for x in w.values())
    if use_int:
        denom = math.lcm(1, *(Fraction(x).denominator for x in w.values())) if w else 1
        scaled = {e: int(Fraction(x) * denom) for e, x in w.items()}
        solver_zero = 0
    else:
        denom = 1
        scaled = dict(w)
        solver_zero = zero

    adj: list[list[tuple[int, object]]] = [[] for _ in rows]
    for (s, t), wx in scaled.items():
        j = col_of_item[s]
        for i in row_of_buyer[t]:
            adj[i].append((j, wx))

    match_row, u, v = _hungarian(len(rows), len(g.items), adj, solver_zero)

    edges = []
    for i, j in enumerate(match_row):
        if j >= 0:
            edges.append((g.items[j], rows[i]))
    edge_set = frozenset(edges)
    if len(edge_set) != len(edges):
        raise InternalConsistencyError("expansion produced a repeated edge")
    value = sum((w[e] for e in edge_set), zero)

    if not want_dual:
        return edge_set, value, None

    pi: dict[str, Fraction] = {}
    for t in g.buyers:
        vals = {u[i] for i in row_of_buyer[t]}
        if len(vals) > 1:
            raise InternalConsistencyError(f"copies of buyer {t} got unequal duals")
        raw = vals.pop() if vals else 0
        pi[t] = Fraction(raw, denom) if use_int else raw
    for s in g.items:
        raw = v[col_of_item[s]]
        pi[s] = Fraction(raw, denom) if use_int else raw
    return edge_set, value, pi


def _check_optimal_pair(g: BipartiteGraph, matching: BMatching, value: Fraction,
                        covering: Covering) -> None:
    pi = covering.pi
    for vx in g.items + g.buyers:
        if pi[vx] < 0:
            raise InternalConsistencyError("negative dual value")
    for s, t in g.edges:
        if pi[s] + pi[t] < g.weight[(s, t)]:
            raise InternalConsistencyError("dual is not a covering")
    for e in matching.edges:
        if pi[e[0]] + pi[e[1]] != g.weight[e]:
            raise InternalConsistencyError("matched edge not tight")
    if covering.total_value(g) != value:
        raise InternalConsistencyError("strong duality gap")
    deg: dict[str, int] = {}
    for s, t in matching.edges:
        deg[s] = deg.get(s, 0) + 1
        deg[t] = deg.get(t, 0) + 1
    for vx in g.items + g.buyers:
        if pi[vx] > 0 and deg.get(vx, 0) != g.capacity[vx]:
            raise InternalConsistencyError("complementary slackness violated")


def solve_with_covering(g: BipartiteGraph) -> SolveResult:
    """Maximum-weight b-matching together with an optimal covering (verified)."""
    edges, value, pi = _solve(g)
    result = SolveResult(BMatching(edges), value, Covering(pi))
    _check_optimal_pair(g, result.matching, result.value, result.covering)
    return result


def max_weight_bmatching(g: BipartiteGraph) -> tuple[BMatching, Fraction]:
    """A maximum-weight b-matching of g and its total weight (deterministic)."""
    res = solve_with_covering(g)
    return res.matching, res.value


def max_weight_value(g: BipartiteGraph) -> Fraction:
    edges, value, _ = _solve(g, want_dual=False)
    return value


def optimal_covering(g: BipartiteGraph) -> Covering:
    """An optimal non-negative weighted covering with pi . b = optimum weight."""
    return solve_with_covering(g).covering


def max_weight_forced_edge(g: BipartiteGraph, edge: Edge) -> Fraction:
    """Maximum weight over b-matchings that contain the given edge.

    Realized as capacity reduction on both endpoints plus the constant w(e).
    """
    if edge not in g.edge_set:
        raise ModelError(f"edge {edge!r} not in graph")
    s, t = edge
    reduced = g.without([s]).with_capacity(t, g.capacity[t] - 1)
    if reduced.capacity[t] == 0:
        reduced = reduced.without([t])
    return g.weight[edge] + max_weight_value(reduced)


def max_weight_reduced_capacity(g: BipartiteGraph, vertex: str) -> Fraction:
    """Maximum weight over b-matchings with capacity at `vertex` lowered by one."""
    if vertex not in g.capacity:
        raise ModelError(f"unknown vertex {vertex!r}")
    if g.capacity[vertex] <= 1:
        return max_weight_value(g.without([vertex]))
    return max_weight_value(g.with_capacity(vertex, g.capacity[vertex] - 1))


def bfactor_exists(g: BipartiteGraph) -> tuple[bool, Optional[frozenset[BuyerId]]]:
    """Whether g has a b-factor (degree = capacity everywhere).

    On failure returns a deficient buyer set Y with |N(Y)| < b(Y), or None when
    the counting condition |S| = b(T) already fails.
    """
    demand = g.buyer_capacity_total()
    if len(g.items) != demand:
        return False, None
    unit = {e: Fraction(1) for e in g.edges}
    edges, value, _ = _solve(g, weights=unit, want_dual=False)
    if value == demand:
        return True, None
    deficient = _deficient_set(g, edges)
    return False, deficient


def _deficient_set(g: BipartiteGraph, matched: frozenset[Edge]) -> frozenset[BuyerId]:
    """Hall violator extraction by alternating reachability from unmatched demand."""
    matched_of_item: dict[ItemId, list[BuyerId]] = {}
    used: dict[BuyerId, int] = {t: 0 for t in g.buyers}
    for s, t in matched:
        matched_of_item.setdefault(s, []).append(t)
        used[t] += 1
    frontier = [t for t in g.buyers if used[t] < g.capacity[t]]
    reached_buyers = set(frontier)
    reached_items: set[ItemId] = set()
    while frontier:
        nxt = []
        for t in frontier:
            for s in g.buyer_adj[t]:
                if s in reached_items:
                    continue
                reached_items.add(s)
                for t2 in matched_of_item.get(s, ()):
                    if t2 not in reached_buyers:
                        reached_buyers.add(t2)
                        nxt.append(t2)
        frontier = nxt
    witness = frozenset(reached_buyers)
    nb = g.neighbors(witness)
    if not witness or len(nb) >= sum(g.capacity[t] for t in witness):
        raise InternalConsistencyError("deficient-set extraction failed")
    return witness


def lexicographic_min_edge_optimum(g: BipartiteGraph) -> tuple[BMatching, Fraction]:
    """Maximum-weight b-matching using the fewest edges among all optima.

    Solved over lexicographic (weight, -edge count) values; no weight scaling.
    """
    lex = {e: LexWeight(g.weight[e], -1) for e in g.edges}
    edges, value, _ = _solve(g, weights=lex, zero=LexWeight.zero(), want_dual=False)
    return BMatching(edges), value.w
