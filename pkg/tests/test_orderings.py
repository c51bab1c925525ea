import random
from fractions import Fraction
from itertools import permutations

import pytest

from dynprice import (BipartiteGraph, Ordering, adequate_bidemand,
                      adequate_three_buyers, adequate_two_buyers, combine,
                      generate_instance, market_graph, refine_covering,
                      tight_subgraph, verify_adequate)
from dynprice.errors import ContractViolationError, ModelError
from dynprice.matching import Covering

from conftest import brute_verify_adequate


def tight_of(m):
    g = market_graph(m)
    return tight_subgraph(refine_covering(g), g)


def unit_graph(items, buyers, caps, edges):
    cap = {s: 1 for s in items}
    cap.update(caps)
    return BipartiteGraph.build(items, buyers,
                                {e: Fraction(1) for e in edges}, cap, edges=edges)


def random_factor_graph(rng, nb=None):
    """Unit-weight graph built around a planted (1,2)-factor plus noise edges."""
    nb = nb or rng.randint(2, 3)
    buyers = [f"t{i}" for i in range(nb)]
    caps = {t: 2 for t in buyers}
    items = [f"s{i}" for i in range(2 * nb)]
    shuffled = items[:]
    rng.shuffle(shuffled)
    edges = set()
    for k, t in enumerate(buyers):
        edges.add((shuffled[2 * k], t))
        edges.add((shuffled[2 * k + 1], t))
    for s in items:
        for t in buyers:
            if rng.random() < 0.35:
                edges.add((s, t))
    return unit_graph(items, buyers, caps, sorted(edges))


def brute_find_adequate(g):
    for perm in permutations(g.items):
        sigma = Ordering.from_sequence(perm)
        if brute_verify_adequate(g, sigma):
            return sigma
    return None


def test_ordering_validation():
    with pytest.raises(ModelError):
        Ordering({"s1": 1, "s2": 3})


def test_combine_constant_pi():
    sigma = Ordering.from_sequence(["s2", "s1", "s3"])
    pi = Covering({s: Fraction(1) for s in ["s1", "s2", "s3"]})
    assert combine(pi, sigma).items_in_order() == ("s2", "s1", "s3")


def test_combine_pi_dominates():
    sigma = Ordering.from_sequence(["s1", "s2"])
    pi = Covering({"s1": Fraction(1), "s2": Fraction(0)})
    assert combine(pi, sigma).items_in_order() == ("s2", "s1")
    with pytest.raises(ModelError):
        combine(Covering({"s1": Fraction(0)}), sigma)


def test_combine_lifts_adequacy_through_unit_dual():
    # sigma adequate for the tight subgraph lifts to the full unit graph
    rng = random.Random(51)
    lifted = 0
    for _ in range(12):
        g = random_factor_graph(rng)
        sc = refine_covering(g)
        gpi = tight_subgraph(sc, g)
        sigma = brute_find_adequate(gpi)
        assert sigma is not None  # adequate orderings exist for >=1 factor graphs
        got = combine(sc.pi, sigma)
        assert brute_verify_adequate(g, got)
        if set(gpi.edges) != set(g.edges):
            lifted += 1
    assert lifted > 0  # at least some runs actually pruned edges


def test_two_buyers_disjoint(e2):
    gpi = tight_of(e2)
    sigma = adequate_two_buyers(gpi)
    assert verify_adequate(gpi, sigma)


def test_two_buyers_symmetric():
    g = unit_graph(["s1", "s2"], ["t1", "t2"], {"t1": 1, "t2": 1},
                   [(s, t) for s in ["s1", "s2"] for t in ["t1", "t2"]])
    sigma = adequate_two_buyers(g)
    assert verify_adequate(g, sigma)


def test_two_buyers_shared_tail():
    # t1 wants two, t2 wants one and can only use the shared item s3
    g = unit_graph(["s1", "s2", "s3"], ["t1", "t2"], {"t1": 2, "t2": 1},
                   [("s1", "t1"), ("s2", "t1"), ("s3", "t1"), ("s3", "t2")])
    sigma = adequate_two_buyers(g)
    assert sigma.rank["s3"] == 3  # shared item ordered last
    assert verify_adequate(g, sigma)
    first_two = sorted(sorted(g.buyer_adj["t1"], key=sigma.rank.__getitem__)[:2])
    assert first_two == ["s1", "s2"]


def test_two_buyers_contract():
    g = unit_graph(["s1", "s2", "s3"], ["t1", "t2"], {"t1": 1, "t2": 1},
                   [("s1", "t1"), ("s2", "t2"), ("s3", "t1")])
    with pytest.raises(ContractViolationError):
        adequate_two_buyers(g)  # |S| != b(T)


def test_three_buyers_figure_market(fig1):
    gpi = tight_of(fig1)
    sigma = adequate_three_buyers(gpi)
    assert verify_adequate(gpi, sigma)
    first_two = sorted(sorted(gpi.buyer_adj["t1"], key=sigma.rank.__getitem__)[:2])
    assert first_two != ["s3", "s4"]  # the infeasible pair never comes first


def test_three_buyers_disjoint_singletons():
    g = unit_graph(["s1", "s2", "s3"], ["t1", "t2", "t3"],
                   {"t1": 1, "t2": 1, "t3": 1},
                   [("s1", "t1"), ("s2", "t2"), ("s3", "t3")])
    sigma = adequate_three_buyers(g)
    assert verify_adequate(g, sigma)


def test_three_buyers_random_corpus():
    rng = random.Random(61)
    for _ in range(25):
        nb = rng.randint(1, 3)
        profile = [rng.randint(1, 3) for _ in range(nb)]
        m = generate_instance(rng.randint(0, 10**6), nb, profile, (1, 4))
        gpi = tight_of(m)
        sigma = adequate_three_buyers(gpi)
        assert verify_adequate(gpi, sigma)
        assert brute_verify_adequate(gpi, sigma)


def test_three_buyers_planted_factor_graphs():
    # sparse tight graphs with demands up to five push the labeling into its
    # overflow branches (labels 3, 2 and 1), unlike complete random markets
    from collections import Counter
    from dynprice.orderings import three_buyer_labeling
    from dynprice.sets import legal_classes_3
    rng = random.Random(12)
    hist = Counter()
    for trial in range(60):
        demands = sorted([rng.randint(1, 5) for _ in range(3)], reverse=True)
        buyers = ["t1", "t2", "t3"]
        caps = dict(zip(buyers, demands))
        items = [f"s{i}" for i in range(sum(demands))]
        shuffled = items[:]
        rng.shuffle(shuffled)
        edges = set()
        pos = 0
        for t in buyers:
            for _ in range(caps[t]):
                edges.add((shuffled[pos], t))
                pos += 1
        for s in items:
            for t in buyers:
                if rng.random() < 0.45:
                    edges.add((s, t))
        cap = {s: 1 for s in items}
        cap.update(caps)
        g = unit_graph(items, buyers, caps, sorted(edges))
        sc = refine_covering(g)
        gpi = tight_subgraph(sc, g)
        sigma = adequate_three_buyers(gpi)
        assert verify_adequate(gpi, sigma)
        classes = legal_classes_3(gpi)
        reduced = {buyers[i]: caps[buyers[i]] - len(classes[frozenset((i + 1,))])
                   for i in range(3)}
        hist.update(three_buyer_labeling(gpi, reduced).theta.values())
    assert all(hist[label] > 0 for label in (1, 2, 3, 4))


def test_bidemand_d1(d1_graph):
    trace = []
    sigma = adequate_bidemand(d1_graph, trace)
    assert verify_adequate(d1_graph, sigma)
    # deterministic descent: Z={t1} maximal, X={t3} all-pairs-feasible (2.2.1),
    # then the two-buyer residue splits on the blocking pair {s2,s3} (2.2.2)
    assert [e["case"] for e in trace] == ["2.2.1", "2.2.2", "base"]
    assert trace[0]["Z"] == ["t1"] and trace[0]["X"] == ["t3"]
    assert trace[1]["pair"] == ["s2", "s3"]


def test_bidemand_two_components():
    g = unit_graph(["s1", "s2", "s3", "s4"], ["t1", "t2"], {"t1": 2, "t2": 2},
                   [("s1", "t1"), ("s2", "t1"), ("s3", "t2"), ("s4", "t2")])
    trace = []
    sigma = adequate_bidemand(g, trace)
    assert verify_adequate(g, sigma)
    assert any(e["case"] == "3" for e in trace)


def test_bidemand_complete_case1():
    items = [f"s{i}" for i in range(6)]
    buyers = ["t1", "t2", "t3"]
    g = unit_graph(items, buyers, {t: 2 for t in buyers},
                   [(s, t) for s in items for t in buyers])
    trace = []
    sigma = adequate_bidemand(g, trace)
    assert verify_adequate(g, sigma)
    assert any(e["case"] == "1" for e in trace)


def test_bidemand_figure_market_blocking_pair(fig1):
    gpi = tight_of(fig1)
    trace = []
    sigma = adequate_bidemand(gpi, trace)
    assert verify_adequate(gpi, sigma)
    cases = [e["case"] for e in trace]
    assert "2.2.2" in cases  # X and Z cover the buyers; pair splits neighborhoods


def test_bidemand_mixed_demands():
    # demand-one buyers ride along with bi-demand buyers
    rng = random.Random(71)
    for _ in range(15):
        nb = rng.randint(2, 4)
        profile = [rng.choice([1, 2]) for _ in range(nb)]
        m = generate_instance(rng.randint(0, 10**6), nb, profile, (1, 3))
        gpi = tight_of(m)
        sigma = adequate_bidemand(gpi)
        assert verify_adequate(gpi, sigma)


def test_bidemand_random_corpus():
    rng = random.Random(81)
    for _ in range(30):
        nb = rng.randint(2, 5)
        m = generate_instance(rng.randint(0, 10**6), nb, 2, (1, 3))
        gpi = tight_of(m)
        sigma = adequate_bidemand(gpi)
        assert verify_adequate(gpi, sigma)
        assert brute_verify_adequate(gpi, sigma)


def test_bidemand_larger_markets():
    # beyond the end-to-end corpus sizes: adequacy only, six and seven buyers
    for k in range(6):
        m = generate_instance(90000 + k, 6 + k % 2, 2, (1, 2 + k % 3))
        gpi = tight_of(m)
        assert verify_adequate(gpi, adequate_bidemand(gpi))


def test_bidemand_rejects_big_demand():
    g = unit_graph(["s1", "s2", "s3"], ["t1"], {"t1": 3},
                   [("s1", "t1"), ("s2", "t1"), ("s3", "t1")])
    with pytest.raises(ContractViolationError):
        adequate_bidemand(g)


def test_verify_adequate_single_buyer():
    g = unit_graph(["s1", "s2"], ["t1"], {"t1": 2}, [("s1", "t1"), ("s2", "t1")])
    assert verify_adequate(g, Ordering.from_sequence(["s1", "s2"]))
    assert verify_adequate(g, Ordering.from_sequence(["s2", "s1"]))


def test_verify_adequate_detects_bad_ordering(d1_graph):
    bad = Ordering.from_sequence(["s2", "s3", "s1", "s4", "s5", "s6"])
    assert not verify_adequate(d1_graph, bad)
    assert not brute_verify_adequate(d1_graph, bad)


def test_verify_adequate_matches_brute_force():
    rng = random.Random(91)
    agree_false = 0
    for _ in range(25):
        g = random_factor_graph(rng)
        items = list(g.items)
        rng.shuffle(items)
        sigma = Ordering.from_sequence(items)
        got = verify_adequate(g, sigma)
        assert got == brute_verify_adequate(g, sigma)
        agree_false += not got
    assert agree_false > 0  # random orderings do fail sometimes
