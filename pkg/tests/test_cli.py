import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynprice import generate_instance, parse_instance, serialize_market
from dynprice.cli import main, rational_from_str, rational_to_str
from dynprice.errors import ModelError

from conftest import figure_market


def roundtrip(m):
    return parse_instance(json.dumps(serialize_market(m)))


def test_parse_roundtrip(e1, e2):
    for m in (e1, e2, figure_market()):
        back = roundtrip(m)
        assert back.items == m.items and back.buyers == m.buyers
        assert back.demand == dict(m.demand)
        assert back.value == dict(m.value)


def test_parse_rationals():
    assert rational_from_str("3") == 3
    assert rational_from_str("5/2") == Fraction(5, 2)
    assert rational_to_str(Fraction(5, 2)) == "5/2"
    assert rational_to_str(Fraction(4, 2)) == "2"
    for bad in ("5/0", "x", "1.5", "", "3/-2", 7):
        with pytest.raises(ModelError):
            rational_from_str(bad)


def test_parse_errors():
    base = {"items": ["s1"], "buyers": [{"id": "t1", "demand": 1, "values": {"s1": "1"}}]}
    broken = json.loads(json.dumps(base))
    del broken["buyers"][0]["values"]["s1"]
    with pytest.raises(ModelError, match="missing"):
        parse_instance(json.dumps(broken))
    broken = json.loads(json.dumps(base))
    broken["buyers"][0]["values"]["s1"] = "5/0"
    with pytest.raises(ModelError, match="denominator"):
        parse_instance(json.dumps(broken))
    broken = json.loads(json.dumps(base))
    broken["items"] = ["s1", "s1"]
    with pytest.raises(ModelError):
        parse_instance(json.dumps(broken))
    broken = json.loads(json.dumps(base))
    broken["buyers"][0]["demand"] = 0
    with pytest.raises(ModelError, match="demand"):
        parse_instance(json.dumps(broken))
    broken = json.loads(json.dumps(base))
    broken["buyers"][0]["values"]["s1"] = "-2"
    with pytest.raises(ModelError, match="non-negative"):
        parse_instance(json.dumps(broken))


@settings(max_examples=40, deadline=None)
@given(st.fractions(min_value=0, max_value=100))
def test_rational_string_roundtrip(x):
    assert rational_from_str(rational_to_str(x)) == x


def test_generate_deterministic():
    a = generate_instance(12, 3, 2, (1, 9))
    b = generate_instance(12, 3, 2, (1, 9))
    assert serialize_market(a) == serialize_market(b)
    c = generate_instance(13, 3, 2, (1, 9))
    assert serialize_market(a) != serialize_market(c)


def test_generate_shapes():
    m = generate_instance(0, 3, 2, (1, 5))
    assert len(m.items) == 6
    m2 = generate_instance(0, 2, [1, 3], (1, 5))
    assert len(m2.items) == 4 and m2.demand == {"t1": 1, "t2": 3}
    with pytest.raises(ModelError):
        generate_instance(0, 2, [1], (1, 5))
    with pytest.raises(ModelError):
        generate_instance(0, 2, 2, (0, 5))


def test_generate_satisfies_saturation():
    from dynprice import check_opt_property
    for seed in range(25):
        m = generate_instance(seed, 2 + seed % 3, 2, (1, 3))
        assert check_opt_property(m).opt_property_holds


def write_market(tmp_path, m, name="m.json"):
    path = tmp_path / name
    path.write_text(json.dumps(serialize_market(m)))
    return str(path)


def test_cli_generate(capsys):
    assert main(["generate", "--seed", "4", "--buyers", "2", "--demands", "2,1"]) == 0
    data = json.loads(capsys.readouterr().out)
    m = parse_instance(json.dumps(data))
    assert m.demand == {"t1": 2, "t2": 1} and len(m.items) == 3


def test_cli_solve_dual_order_price(tmp_path, capsys, e2):
    path = write_market(tmp_path, e2)
    assert main(["solve", "--input", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["welfare"] == "14"
    assert sorted(out["allocation"]["t1"]) == ["s1", "s2"]

    assert main(["dual", "--input", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert sorted(map(tuple, out["tight_edges"])) == [
        ("s1", "t1"), ("s2", "t1"), ("s3", "t2"), ("s4", "t2")]
    assert out["slack"] is not None

    assert main(["order", "--input", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert sorted(out["ordering"]) == ["s1", "s2", "s3", "s4"]

    assert main(["price", "--input", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mode"] == "multi" and set(out["prices"]) == set(e2.items)


def test_cli_order_methods(tmp_path, capsys, d1_market):
    # three buyers go through the labeling construction
    path = write_market(tmp_path, d1_market, "d1.json")
    assert main(["order", "--input", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["method"] == "three-buyer"
    assert sorted(out["ordering"]) == sorted(d1_market.items)
    # four bi-demand buyers go through the recursive case analysis
    m4 = generate_instance(2, 4, 2, (1, 2))
    path4 = write_market(tmp_path, m4, "m4.json")
    assert main(["order", "--input", path4]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["method"] == "bi-demand"
    assert out["case_trace"]  # at least one recursion level recorded
    assert sorted(out["ordering"]) == sorted(m4.items)


def test_cli_simulate_exit_codes(tmp_path, capsys, e2, d1_market):
    path = write_market(tmp_path, e2)
    assert main(["simulate", "--input", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["all_optimal"] is True and out["complete"] is True

    bad = write_market(tmp_path, d1_market, "d1.json")
    assert main(["simulate", "--input", bad, "--sabotage", "reversed"]) == 1
    out = json.loads(capsys.readouterr().out)
    assert out["all_optimal"] is False
    assert out["counterexample"] is not None
    assert out["counterexample"]["final_welfare"] != out["optimum"]


def test_cli_simulate_sampled(tmp_path, capsys, e1):
    path = write_market(tmp_path, e1)
    assert main(["simulate", "--input", path, "--orders", "4", "--seed", "9"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["runs_checked"] == 4 and out["complete"] is False


def test_cli_verify(tmp_path, capsys):
    path = write_market(tmp_path, figure_market(), "fig.json")
    assert main(["verify", "--input", path]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["min_surplus"] == 1
    assert ["t1"] in out["dangerous_sets"]
    assert out["feasibility"]["t1"]["s3,s4"] is False


def test_cli_model_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{\"items\": 3}")
    assert main(["dual", "--input", str(path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_unsupported_market(tmp_path, capsys):
    m = generate_instance(5, 4, 3, (1, 4))
    path = write_market(tmp_path, m, "big.json")
    assert main(["price", "--input", path]) == 2
