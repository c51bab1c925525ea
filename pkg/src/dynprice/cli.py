"""Command-line surface: instance (de)serialization, generation, and the
solve/dual/order/price/simulate/verify verbs.

Markets travel as JSON with rationals encoded as decimal integer strings or
"p/q" strings; the value matrix must be complete.  All outputs are
machine-readable JSON (``--pretty`` for humans).  Exit codes: 0 success /
all-optimal, 1 verified-false (counterexample emitted), 2 usage or model
error.
"""

from __future__ import annotations

import argparse
import json
import random
import re
import sys
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

from . import sets
from .dual import refine_covering, tight_subgraph
from .errors import (ContractViolationError, InternalConsistencyError, ModelError,
                     OracleCapError, UnsupportedMarketError)
from .matching import max_weight_bmatching, optimal_covering
from .model import Market, check_opt_property, market_graph, trim_items
from .orderings import adequate_bidemand, adequate_three_buyers
from .pricing import multi_round, unit_round
from .simulation import RunTrace, run_exhaustive, run_sampled

_USAGE_ERROR = 2


def rational_to_str(x: Fraction) -> str:
    return str(x)


_RATIONAL_RE = re.compile(r"-?[0-9]+(/[0-9]+)?$")


def rational_from_str(raw: object, path: str = "value") -> Fraction:
    if not isinstance(raw, str):
        raise ModelError(f"{path}: rationals must be strings, got {type(raw).__name__}")
    if not _RATIONAL_RE.fullmatch(raw):
        raise ModelError(f"{path}: malformed rational {raw!r}")
    num, slash, den = raw.partition("/")
    n = int(num)
    d = int(den) if slash else 1
    if d == 0:
        raise ModelError(f"{path}: denominator must be positive in {raw!r}")
    return Fraction(n, d)


def parse_instance(raw: bytes | str) -> Market:
    """Validated market from JSON; errors pinpoint field paths."""
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ModelError("top level must be an object")
    items = data.get("items")
    if not isinstance(items, list) or not all(isinstance(s, str) for s in items):
        raise ModelError("items: must be a list of strings")
    buyers_raw = data.get("buyers")
    if not isinstance(buyers_raw, list):
        raise ModelError("buyers: must be a list")
    buyers: list[str] = []
    demand: dict[str, int] = {}
    value: dict[tuple[str, str], Fraction] = {}
    for k, entry in enumerate(buyers_raw):
        path = f"buyers[{k}]"
        if not isinstance(entry, dict):
            raise ModelError(f"{path}: must be an object")
        bid = entry.get("id")
        if not isinstance(bid, str):
            raise ModelError(f"{path}.id: must be a string")
        dem = entry.get("demand")
        if not isinstance(dem, int) or isinstance(dem, bool) or dem < 1:
            raise ModelError(f"{path}.demand: must be a positive integer")
        values = entry.get("values")
        if not isinstance(values, dict):
            raise ModelError(f"{path}.values: must be an object")
        extra = set(values) - set(items)
        if extra:
            raise ModelError(f"{path}.values: unknown items {sorted(extra)!r}")
        for s in items:
            if s not in values:
                raise ModelError(f"{path}.values.{s}: missing (value matrix is complete)")
            v = rational_from_str(values[s], f"{path}.values.{s}")
            if v < 0:
                raise ModelError(f"{path}.values.{s}: must be non-negative")
            value[(bid, s)] = v
        buyers.append(bid)
        demand[bid] = dem
    return Market.build(items, buyers, demand, value)


def serialize_market(m: Market) -> dict:
    return {
        "items": list(m.items),
        "buyers": [
            {"id": t, "demand": m.demand[t],
             "values": {s: rational_to_str(m.value[(t, s)]) for s in m.items}}
            for t in m.buyers
        ],
    }


def generate_instance(seed: int, buyers: int, demand_profile: int | Sequence[int],
                      value_range: tuple[int, int] = (1, 20)) -> Market:
    """Deterministic random market with |S| = total demand and positive values.

    Positive values plus enough items make the saturation property hold; it is
    still verified, with a deterministic re-draw on failure.
    """
    lo, hi = value_range
    if lo < 1 or hi < lo:
        raise ModelError("value range must satisfy 1 <= lo <= hi")
    if isinstance(demand_profile, int):
        demands = [demand_profile] * buyers
    else:
        demands = list(demand_profile)
    if len(demands) != buyers or any(d < 1 for d in demands):
        raise ModelError("demand profile must list a positive demand per buyer")
    names_t = [f"t{k + 1}" for k in range(buyers)]
    names_s = [f"s{k + 1}" for k in range(sum(demands))]
    rng = random.Random(seed)
    for _ in range(16):
        value = {(t, s): Fraction(rng.randint(lo, hi)) for t in names_t for s in names_s}
        m = Market.build(names_s, names_t, dict(zip(names_t, demands)), value)
        if check_opt_property(m).opt_property_holds:
            return m
    raise InternalConsistencyError("generator failed to hit the saturation property")


def _dump(obj, args) -> None:
    print(json.dumps(obj, indent=2 if args.pretty else None, sort_keys=True))


def _load_market(args) -> Market:
    with open(args.input, "rb") as fh:
        return parse_instance(fh.read())


def _pi_json(pi) -> dict:
    return {v: rational_to_str(x) for v, x in pi.pi.items()}


def _trace_json(trace: RunTrace) -> dict:
    return {
        "steps": [
            {"buyer": st.buyer,
             "prices": {s: rational_to_str(p) for s, p in st.prices.price.items()},
             "delta": rational_to_str(st.prices.delta),
             "bundle": sorted(st.bundle),
             "paid": rational_to_str(st.paid),
             "trimmed_away": sorted(st.trimmed_away)}
            for st in trace.steps
        ],
        "final_welfare": rational_to_str(trace.final_welfare),
        "leftover_items": sorted(trace.leftover_items),
    }


def _cmd_generate(args) -> int:
    demands: int | list[int]
    if "," in args.demands:
        demands = [int(x) for x in args.demands.split(",")]
    else:
        demands = int(args.demands)
    m = generate_instance(args.seed, args.buyers, demands, (args.value_lo, args.value_hi))
    _dump(serialize_market(m), args)
    return 0


def _cmd_solve(args) -> int:
    m = _load_market(args)
    g = market_graph(m)
    bm, value = max_weight_bmatching(g)
    pi = optimal_covering(g)
    _dump({
        "welfare": rational_to_str(value),
        "matching": sorted([s, t] for s, t in bm.edges),
        "allocation": {t: sorted(bm.bundle(t)) for t in m.buyers},
        "pi": _pi_json(pi),
    }, args)
    return 0


def _cmd_dual(args) -> int:
    m = _load_market(args)
    sc = refine_covering(market_graph(m))
    _dump({
        "pi": _pi_json(sc.pi),
        "tight_edges": sorted([s, t] for s, t in sc.tight_edges),
        "slack": None if sc.slack is None else rational_to_str(sc.slack),
    }, args)
    return 0


def _cmd_order(args) -> int:
    m = _load_market(args)
    trimmed, removed = trim_items(m)
    g = market_graph(trimmed)
    sc = refine_covering(g)
    gpi = tight_subgraph(sc, g)
    trace: list = []
    if len(trimmed.buyers) <= 3:
        sigma = adequate_three_buyers(gpi)
        method = "three-buyer"
    elif all(trimmed.demand[t] <= 2 for t in trimmed.buyers):
        sigma = adequate_bidemand(gpi, trace)
        method = "bi-demand"
    else:
        raise UnsupportedMarketError("no adequate-ordering construction applies")
    _dump({
        "method": method,
        "ordering": list(sigma.items_in_order()),
        "trimmed_away": sorted(removed),
        "case_trace": trace,
    }, args)
    return 0


def _cmd_price(args) -> int:
    m = _load_market(args)
    mode = args.mode
    if mode == "auto":
        mode = "unit" if all(m.demand[t] == 1 for t in m.buyers) else "multi"
    rp = unit_round(m) if mode == "unit" else multi_round(m)
    _dump({
        "mode": mode,
        "prices": {s: rational_to_str(p) for s, p in rp.prices.price.items()},
        "pi": _pi_json(rp.pi),
        "sigma": None if rp.sigma is None else list(rp.sigma.items_in_order()),
        "delta": rational_to_str(rp.prices.delta),
        "trimmed_away": sorted(rp.removed),
    }, args)
    return 0


def _cmd_simulate(args) -> int:
    m = _load_market(args)
    mode = args.mode
    if mode == "auto":
        mode = "unit" if all(m.demand[t] == 1 for t in m.buyers) else "multi"
    strategy = None
    if args.sabotage == "reversed":
        from .simulation import reversed_ordering_strategy
        strategy = reversed_ordering_strategy
    if args.orders:
        verdict = run_sampled(m, args.orders, args.seed, mode=mode,
                              ordering_strategy=strategy, instance_id=args.input)
    else:
        verdict = run_exhaustive(m, mode=mode, budget=args.budget,
                                 ordering_strategy=strategy, instance_id=args.input)
    _dump({
        "instance": verdict.instance_id,
        "mode": mode,
        "runs_checked": verdict.runs_checked,
        "all_optimal": verdict.all_optimal,
        "complete": verdict.complete,
        "optimum": rational_to_str(verdict.optimum),
        "counterexample": None if verdict.counterexample is None
        else _trace_json(verdict.counterexample),
    }, args)
    return 0 if verdict.all_optimal else 1


def _cmd_verify(args) -> int:
    m = _load_market(args)
    trimmed, removed = trim_items(m)
    g = market_graph(trimmed)
    sc = refine_covering(g)
    gpi = tight_subgraph(sc, g)
    out: dict = {"trimmed_away": sorted(removed)}
    ms = sets.min_surplus_set(gpi)
    out["min_surplus"] = None if ms is None else ms[1]
    out["dangerous_sets"] = [sorted(Y) for Y in sets.all_dangerous_sets(gpi)]
    if ms is not None and ms[1] == 1:
        out["maximal_dangerous"] = sorted(sets.maximal_dangerous_set(gpi))
    else:
        out["maximal_dangerous"] = None
    feas: dict[str, dict[str, bool]] = {}
    for t in gpi.buyers:
        nbrs = gpi.buyer_adj[t]
        table: dict[str, bool] = {}
        combos = list(combinations(nbrs, gpi.capacity[t]))
        if len(combos) <= 512:
            for F in combos:
                table[",".join(F)] = sets.feasible_bundle(gpi, t, F)
        feas[t] = table
    out["feasibility"] = feas
    _dump(out, args)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="dynprice",
                                  description="dynamic pricing for multi-demand markets")
    sub = top.add_subparsers(dest="verb", required=True)

    def with_io(p):
        p.add_argument("--input", required=True, help="market JSON file")
        p.add_argument("--pretty", action="store_true")
        return p

    gen = sub.add_parser("generate", help="deterministic random market")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--buyers", type=int, required=True)
    gen.add_argument("--demands", default="1",
                     help="single demand or comma list, e.g. 2 or 2,2,1")
    gen.add_argument("--value-lo", type=int, default=1)
    gen.add_argument("--value-hi", type=int, default=20)
    gen.add_argument("--pretty", action="store_true")
    gen.set_defaults(fn=_cmd_generate)

    with_io(sub.add_parser("solve", help="max-weight allocation and dual")).set_defaults(fn=_cmd_solve)
    with_io(sub.add_parser("dual", help="structured covering")).set_defaults(fn=_cmd_dual)
    with_io(sub.add_parser("order", help="adequate item ordering")).set_defaults(fn=_cmd_order)

    price = with_io(sub.add_parser("price", help="one round of posted prices"))
    price.add_argument("--mode", choices=["auto", "unit", "multi"], default="auto")
    price.set_defaults(fn=_cmd_price)

    sim = with_io(sub.add_parser("simulate", help="adversarial dynamic runs"))
    sim.add_argument("--mode", choices=["auto", "unit", "multi"], default="auto")
    sim.add_argument("--exhaustive", action="store_true", default=True,
                     help="explore all orders and tie-breaks (default)")
    sim.add_argument("--orders", type=int, default=0,
                     help="sample this many random orders instead")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--budget", type=int, default=200000)
    sim.add_argument("--format", choices=["json"], default="json")
    sim.add_argument("--sabotage", choices=["none", "reversed"], default="none",
                     help="negative control: price with a reversed ordering")
    sim.set_defaults(fn=_cmd_simulate)

    with_io(sub.add_parser("verify", help="dangerous sets and feasibility tables")).set_defaults(fn=_cmd_verify)
    return top


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ModelError, ContractViolationError, UnsupportedMarketError,
            OracleCapError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
