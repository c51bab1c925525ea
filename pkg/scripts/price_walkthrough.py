#!/usr/bin/env python3
"""Walk one dynamic run round by round and print everything the seller posts.

Shows the structured dual, the tight graph, the adequate ordering with the
case trace, the posted prices, and the arriving buyer's unique best bundle.

Usage:
    python scripts/price_walkthrough.py [--seed 3] [--buyers 3] [--demand 2]
"""

import argparse

from dynprice import (best_bundles, generate_instance, market_graph, multi_round,
                      oracle_opt_value, refine_covering, restrict_market,
                      tight_subgraph)
from dynprice.orderings import adequate_bidemand


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--buyers", type=int, default=3)
    ap.add_argument("--demand", type=int, default=2)
    ap.add_argument("--value-hi", type=int, default=4)
    args = ap.parse_args()

    m = generate_instance(args.seed, args.buyers, args.demand, (1, args.value_hi))
    print(f"market: {len(m.items)} items, {len(m.buyers)} buyers, "
          f"optimum welfare {oracle_opt_value(m)}")
    for t in m.buyers:
        print(f"  {t} (b={m.demand[t]}): "
              + " ".join(f"{s}={m.value[(t, s)]}" for s in m.items))

    residual = m
    total = 0
    for round_no, t in enumerate(m.buyers, start=1):
        rp = multi_round(residual)
        g = market_graph(rp.trimmed)
        sc = refine_covering(g)
        gpi = tight_subgraph(sc, g)
        trace = []
        if all(rp.trimmed.demand[x] <= 2 for x in rp.trimmed.buyers):
            adequate_bidemand(gpi, trace)
        print(f"\nround {round_no}: pi = "
              + " ".join(f"{v}={sc.pi.pi[v]}" for v in rp.trimmed.items + rp.trimmed.buyers))
        print(f"  sigma = {list(rp.sigma.items_in_order())}, delta = {rp.prices.delta}")
        if trace:
            print("  case trace:", [e["case"] for e in trace])
        print("  prices:", {s: str(p) for s, p in rp.prices.price.items()})
        bundle = best_bundles(residual, t, rp.prices)[0]
        gain = sum(residual.value[(t, s)] for s in bundle)
        total += gain
        print(f"  {t} arrives, buys {sorted(bundle)} for "
              f"{sum(rp.prices.price[s] for s in bundle)} (welfare +{gain})")
        residual = restrict_market(residual, t, bundle)

    print(f"\nfinal welfare {total} (optimum {oracle_opt_value(m)})")


if __name__ == "__main__":
    main()
