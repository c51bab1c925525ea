"""Refinement of an optimal covering into structured form.

The refined covering pi satisfies, with respect to the original weights:
  (a) an edge is tight iff it is legal (contained in some maximum-weight
      b-matching), and
  (b) pi(v) = 0 iff some maximum-weight b-matching leaves v unsaturated.

The construction follows the two-phase perturbation scheme: phase one raises
the weight of each non-legal edge by half its legality gap, phase two lowers
the weights around each always-saturated vertex by delta/(b(v)+1) and adds the
same amount back to the final dual.  Both phases keep the set of optimal
b-matchings invariant, which justifies two exact shortcuts used here for
speed: an edge that is slack under the current optimal dual is certainly
non-legal with gap at least its slack, and a vertex with a positive current
dual is certainly always-saturated with delta at least that dual value.  Only
the remaining tight-but-unmatched edges and zero-dual vertices are probed with
dedicated solves.  A verification pass of both properties runs on every call.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import matching
from .errors import InternalConsistencyError, ModelError
from .matching import BipartiteGraph, Covering, Edge

INFINITE_SLACK = None  # slack sentinel when no constraint binds


@dataclass(frozen=True)
class StructuredCovering:
    """Optimal covering with tight = legal, plus its tight edges and slack."""

    pi: Covering
    tight_edges: frozenset[Edge]
    slack: Optional[Fraction]


def compute_slack(g: BipartiteGraph, pi: Covering) -> Optional[Fraction]:
    """min over non-tight edge gaps and positive dual values; None when empty."""
    best: Optional[Fraction] = None
    for s, t in g.edges:
        gap = pi.pi[s] + pi.pi[t] - g.weight[(s, t)]
        if gap > 0 and (best is None or gap < best):
            best = gap
    for v in g.items + g.buyers:
        val = pi.pi[v]
        if val > 0 and (best is None or val < best):
            best = val
    return best


def slack_of(sc: StructuredCovering) -> Optional[Fraction]:
    return sc.slack


def is_legal_edge(g: BipartiteGraph, e: Edge) -> bool:
    """Whether some maximum-weight b-matching contains e."""
    if e not in g.edge_set:
        raise ModelError(f"edge {e!r} not in graph")
    return matching.max_weight_forced_edge(g, e) == matching.max_weight_value(g)


def tight_subgraph(sc: StructuredCovering, g: BipartiteGraph) -> BipartiteGraph:
    """Subgraph of tight edges; weights dropped (treated as unit)."""
    return BipartiteGraph.build(
        g.items, g.buyers,
        {e: Fraction(1) for e in sc.tight_edges},
        dict(g.capacity),
        edges=sc.tight_edges,
    )


def refine_covering(g: BipartiteGraph) -> StructuredCovering:
    original_w = dict(g.weight)
    cur_w = dict(original_w)

    def resolve():
        res = matching.solve_with_covering(g.with_weights(cur_w))
        return dict(res.covering.pi), res.matching.edges, res.value

    pi_cur, m_cur, opt_cur = resolve()
    opt_original = opt_cur
    legal: dict[Edge, bool] = {}

    # Phase one: edges in canonical order (items major, input order).
    dirty = False
    for e in g.edges:
        s, t = e
        gap = pi_cur[s] + pi_cur[t] - cur_w[e]
        if gap > 0:
            legal[e] = False
            cur_w[e] += gap / 2
            dirty = True
            continue
        if e in m_cur:
            legal[e] = True
            continue
        if dirty:
            pi_cur, m_cur, value = resolve()
            dirty = False
            if value != opt_cur:
                raise InternalConsistencyError("phase-one optimum drifted")
            gap = pi_cur[s] + pi_cur[t] - cur_w[e]
            if gap > 0:
                legal[e] = False
                cur_w[e] += gap / 2
                dirty = True
                continue
            if e in m_cur:
                legal[e] = True
                continue
        eps = opt_cur - matching.max_weight_forced_edge(g.with_weights(cur_w), e)
        if eps < 0:
            raise InternalConsistencyError("forced-edge value above optimum")
        if eps > 0:
            legal[e] = False
            cur_w[e] += eps / 2
            pi_cur, m_cur, value = resolve()
            if value != opt_cur:
                raise InternalConsistencyError("phase-one optimum drifted")
        else:
            legal[e] = True
    if dirty:
        pi_cur, m_cur, value = resolve()
        if value != opt_cur:
            raise InternalConsistencyError("phase-one optimum drifted")

    # Phase two: vertices (items then buyers, input order).
    vertices = tuple(g.items) + tuple(g.buyers)
    addback: dict[str, Fraction] = {v: Fraction(0) for v in vertices}
    saturated: dict[str, bool] = {}

    bulk = {v: pi_cur[v] for v in vertices if pi_cur[v] > 0}
    if bulk:
        for e in g.edges:
            s, t = e
            dec = Fraction(0)
            if s in bulk:
                dec += bulk[s] / (g.capacity[s] + 1)
            if t in bulk:
                dec += bulk[t] / (g.capacity[t] + 1)
            if dec:
                cur_w[e] -= dec
        for v, dv in bulk.items():
            step = dv / (g.capacity[v] + 1)
            addback[v] += step
            saturated[v] = True
            opt_cur -= step * g.capacity[v]
        pi_cur, m_cur, value = resolve()
        if value != opt_cur:
            raise InternalConsistencyError("phase-two bulk step drifted")

    for v in vertices:
        if v in bulk:
            continue
        delta = opt_cur - matching.max_weight_reduced_capacity(g.with_weights(cur_w), v)
        if delta < 0:
            raise InternalConsistencyError("reduced-capacity value above optimum")
        if delta == 0:
            saturated[v] = False
            continue
        saturated[v] = True
        step = delta / (g.capacity[v] + 1)
        for e in g.edges:
            if v in e:
                cur_w[e] -= step
        addback[v] += step
        opt_cur -= step * g.capacity[v]
        pi_cur, m_cur, value = resolve()
        if value != opt_cur:
            raise InternalConsistencyError("phase-two step drifted")

    pi_prime = {v: pi_cur[v] + addback[v] for v in vertices}
    covering = Covering(pi_prime)

    # Verification: both structured properties plus optimality, always on.
    tight: set[Edge] = set()
    for e in g.edges:
        s, t = e
        gap = pi_prime[s] + pi_prime[t] - original_w[e]
        if gap < 0:
            raise InternalConsistencyError("refined dual is not a covering")
        if gap == 0:
            tight.add(e)
        if (gap == 0) != legal[e]:
            raise InternalConsistencyError("tight/legal mismatch after refinement")
    if covering.total_value(g) != opt_original:
        raise InternalConsistencyError("refined dual is not optimal")
    for v in vertices:
        if (pi_prime[v] > 0) != saturated[v]:
            raise InternalConsistencyError("zero-dual/saturation mismatch")

    slack = compute_slack(g, covering)
    return StructuredCovering(covering, frozenset(tight), slack)
