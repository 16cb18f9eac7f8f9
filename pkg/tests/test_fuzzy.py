import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fltrend.fuzzy import (
    DEFAULT_CONFIG,
    DEFAULT_RULES,
    FuzzyConfig,
    FuzzyVariable,
    IndeterminateScoreError,
    InputVector,
    MembershipFunction,
    aggregate,
    defuzzify,
    fire_rules,
    fuzzify,
    infer,
    membership_degree,
)

# Rule matrix transcribed independently for the oracle: (rssi, speed, distance) -> class.
ORACLE_TABLE = {
    1: ("High", "High", "High", "NH"), 2: ("High", "Medium", "High", "NH"),
    3: ("High", "Low", "High", "NH"), 4: ("Medium", "High", "High", "H"),
    5: ("Medium", "Medium", "High", "H"), 6: ("Medium", "Low", "High", "H"),
    7: ("Low", "High", "High", "H"), 8: ("Low", "Medium", "High", "H"),
    9: ("Low", "Low", "High", "H"), 10: ("High", "High", "Medium", "NH"),
    11: ("High", "Medium", "Medium", "NH"), 12: ("High", "Low", "Medium", "NH"),
    13: ("Medium", "High", "Medium", "H"), 14: ("Medium", "Medium", "Medium", "H"),
    15: ("Medium", "Low", "Medium", "NH"), 16: ("Low", "High", "Medium", "H"),
    17: ("Low", "Medium", "Medium", "H"), 18: ("Low", "Low", "Medium", "H"),
    19: ("High", "High", "Low", "NH"), 20: ("High", "Medium", "Low", "NH"),
    21: ("High", "Low", "Low", "NH"), 22: ("Medium", "High", "Low", "NH"),
    23: ("Medium", "Medium", "Low", "NH"), 24: ("Medium", "Low", "Low", "NH"),
    25: ("Low", "High", "Low", "H"), 26: ("Low", "Medium", "Low", "H"),
    27: ("Low", "Low", "Low", "H"),
}

ORACLE_BREAKPOINTS = {
    "rssi": {"High": (0, 0, 65, 75), "Medium": (65, 75, 75, 86), "Low": (75, 86, 150, 150)},
    "speed": {"Low": (0, 0, 8, 14), "Medium": (8, 14, 16, 22), "High": (16, 22, 120, 120)},
    "distance": {"Low": (0, 0, 30, 50), "Medium": (30, 50, 60, 80), "High": (60, 80, 500, 500)},
}


def oracle_trap(bp, x):
    a, b, c, d = bp
    if a == b and x <= b:
        return 1.0
    if c == d and x >= c:
        return 1.0
    if x <= a or x >= d:
        return 0.0
    if x < b:
        return (x - a) / (b - a)
    if x <= c:
        return 1.0
    return (d - x) / (d - c)


def oracle_score(rssi, speed, distance):
    values = {"rssi": rssi, "speed": speed, "distance": distance}
    nh = h = 0.0
    for r, s, d, cls in ORACLE_TABLE.values():
        w = min(oracle_trap(ORACLE_BREAKPOINTS["rssi"][r], values["rssi"]),
                oracle_trap(ORACLE_BREAKPOINTS["speed"][s], values["speed"]),
                oracle_trap(ORACLE_BREAKPOINTS["distance"][d], values["distance"]))
        if cls == "NH":
            nh += w * w
        else:
            h += w * w
    nh, h = math.sqrt(nh), math.sqrt(h)
    return (-100 * nh + 100 * h) / (nh + h)


def crisp(r, s, d):
    return {
        "rssi": {lab: float(lab == r) for lab in ("Low", "Medium", "High")},
        "speed": {lab: float(lab == s) for lab in ("Low", "Medium", "High")},
        "distance": {lab: float(lab == d) for lab in ("Low", "Medium", "High")},
    }


# -- membership ---------------------------------------------------------------

@pytest.mark.parametrize("x, expected", [(15, 1.0), (5, 0.5), (35, 0.0), (25, 0.5), (0, 0.0), (30, 0.0)])
def test_trapezoid_examples(x, expected):
    assert membership_degree(MembershipFunction(0, 10, 20, 30), x) == pytest.approx(expected)


def test_shoulders():
    left = MembershipFunction(0, 0, 8, 14)
    right = MembershipFunction(16, 22, 120, 120)
    assert left(-5) == 1.0 and left(0) == 1.0 and left(11) == 0.5
    assert right(500) == 1.0 and right(19) == 0.5 and right(10) == 0.0


def test_unordered_breakpoints_rejected():
    with pytest.raises(ValueError):
        MembershipFunction(0, 20, 10, 30)


@given(st.floats(-50, 50), st.floats(0, 30), st.floats(0, 30), st.floats(0, 30), st.floats(-200, 200))
def test_membership_in_unit_interval(a, w1, w2, w3, x):
    mf = MembershipFunction(a, a + w1, a + w1 + w2, a + w1 + w2 + w3)
    assert 0.0 <= membership_degree(mf, x) <= 1.0


# -- fuzzify ------------------------------------------------------------------

def test_speed_shoulders_default_config():
    assert fuzzify(InputVector(60, 0, 10), DEFAULT_CONFIG)["speed"] == {"Low": 1.0, "Medium": 0.0, "High": 0.0}
    assert fuzzify(InputVector(60, 30, 10), DEFAULT_CONFIG)["speed"] == {"Low": 0.0, "Medium": 0.0, "High": 1.0}


def test_rssi_low_medium_crossover():
    # Medium falls 75->86 and Low rises 75->86, so they cross at 80.5 dB with degree 0.5
    deg = fuzzify(InputVector(80.5, 10, 10), DEFAULT_CONFIG)["rssi"]
    assert deg["Low"] == pytest.approx(0.5)
    assert deg["Medium"] == pytest.approx(0.5)
    assert deg["High"] == 0.0


def test_out_of_domain_is_clamped_with_warning(caplog):
    deg = fuzzify(InputVector(180.0, 10, 10), DEFAULT_CONFIG)["rssi"]
    assert deg == {"Low": 1.0, "Medium": 0.0, "High": 0.0}
    assert "clamped" in caplog.text


@pytest.mark.parametrize("name", ["rssi", "speed", "distance"])
def test_default_variables_cover_their_domains(name):
    assert DEFAULT_CONFIG.variables[name].gaps() == []


def test_coverage_gap_detected():
    var = FuzzyVariable("speed", (0, 100), {
        "Low": MembershipFunction(0, 0, 5, 10),
        "Medium": MembershipFunction(20, 25, 25, 30),
        "High": MembershipFunction(40, 50, 100, 100),
    })
    assert var.gaps()


# -- rules --------------------------------------------------------------------

def test_rule_table_shape():
    assert len(DEFAULT_RULES) == 27
    assert len({r.antecedent for r in DEFAULT_RULES}) == 27
    assert sum(r.kind == "NH" for r in DEFAULT_RULES) == 13
    assert sum(r.kind == "H" for r in DEFAULT_RULES) == 14
    assert sorted(r.index for r in DEFAULT_RULES if r.kind == "NH") == list(range(1, 14))
    assert sorted(r.index for r in DEFAULT_RULES if r.kind == "H") == list(range(1, 15))


def test_crisp_high_high_high_fires_rule_1_only():
    firing = fire_rules(crisp("High", "High", "High"), DEFAULT_RULES)
    assert firing[1] == 1.0
    assert sum(firing.values()) == 1.0
    assert DEFAULT_RULES[0].consequent == "NH1"


def test_crisp_low_low_low_fires_rule_27_only():
    firing = fire_rules(crisp("Low", "Low", "Low"), DEFAULT_RULES)
    assert firing[27] == 1.0
    assert sum(firing.values()) == 1.0
    assert DEFAULT_RULES[26].consequent == "H14"


def test_mixed_firing():
    degrees = {
        "rssi": {"Medium": 0.4, "Low": 0.6, "High": 0.0},
        "speed": {"High": 1.0, "Low": 0.0, "Medium": 0.0},
        "distance": {"High": 1.0, "Low": 0.0, "Medium": 0.0},
    }
    firing = fire_rules(degrees, DEFAULT_RULES)
    assert firing[4] == pytest.approx(0.4)
    assert firing[7] == pytest.approx(0.6)
    assert all(v == 0 for k, v in firing.items() if k not in (4, 7))


def test_product_tnorm():
    degrees = {"rssi": {"Medium": 0.5}, "speed": {"High": 0.5}, "distance": {"High": 1.0}}
    assert fire_rules(degrees, DEFAULT_RULES, "product")[4] == pytest.approx(0.25)


# -- aggregate / defuzzify ----------------------------------------------------

def test_aggregate_single_rule():
    assert aggregate({1: 1.0}) == (1.0, 0.0)


def test_aggregate_all_nh():
    nh_ids = [r.id for r in DEFAULT_RULES if r.kind == "NH"]
    nh, h = aggregate({i: 1.0 for i in nh_ids})
    assert nh == pytest.approx(math.sqrt(13))
    assert h == 0.0


def test_aggregate_mixed():
    nh, h = aggregate({4: 0.4, 7: 0.6})
    assert nh == 0.0
    assert h == pytest.approx(math.sqrt(0.16 + 0.36))
    assert h == pytest.approx(0.7211, abs=1e-4)


def test_aggregate_rms_variant():
    nh_ids = [r.id for r in DEFAULT_RULES if r.kind == "NH"]
    nh, _ = aggregate({i: 1.0 for i in nh_ids}, mode="rms")
    assert nh == pytest.approx(1.0)


@pytest.mark.parametrize("nh, h, expected", [(1, 1, 0.0), (0, 0.5, 100.0), (0.7211, 0, -100.0), (1, 3, 50.0)])
def test_defuzzify_examples(nh, h, expected):
    assert defuzzify(nh, h) == pytest.approx(expected)


def test_defuzzify_indeterminate():
    with pytest.raises(IndeterminateScoreError):
        defuzzify(0.0, 0.0)


def test_defuzzify_rejects_negative():
    with pytest.raises(ValueError):
        defuzzify(-1.0, 1.0)


nonneg = st.floats(0, 1e6, allow_nan=False)


@given(nonneg, nonneg)
def test_defuzzify_bounds(nh, h):
    if nh + h == 0:
        return
    s = defuzzify(nh, h)
    assert -100.0 <= s <= 100.0
    assert (s == 100.0) == (nh == 0)
    assert (s == -100.0) == (h == 0)


@given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 100))
def test_defuzzify_monotone(nh, h, bump):
    assert defuzzify(nh, h + bump) > defuzzify(nh, h)
    assert defuzzify(nh + bump, h) < defuzzify(nh, h)


@given(st.floats(0.001, 100), st.floats(0.001, 100), st.floats(0.01, 100))
def test_defuzzify_scale_invariant(nh, h, c):
    assert defuzzify(c * nh, c * h) == pytest.approx(defuzzify(nh, h), abs=1e-9)


# -- infer --------------------------------------------------------------------

def test_infer_high_low_low_is_minus_100():
    res = infer(InputVector(rssi=50, speed=3, distance=10))
    assert [k for k, v in res.firing.items() if v > 0] == [21]
    assert res.score == -100.0


def test_infer_low_high_high_is_plus_100():
    res = infer(InputVector(rssi=100, speed=30, distance=150))
    assert [k for k, v in res.firing.items() if v > 0] == [7]
    assert res.score == 100.0


def test_infer_mixed_chain():
    rssi = 75 + 0.6 * 11  # Low = 0.6, Medium = 0.4
    res = infer(InputVector(rssi=rssi, speed=30, distance=150))
    assert res.firing[4] == pytest.approx(0.4)
    assert res.firing[7] == pytest.approx(0.6)
    assert res.nh_score == 0.0
    assert res.h_score == pytest.approx(0.7211, abs=1e-4)
    assert res.score == 100.0


@given(st.floats(0, 150), st.floats(0, 120), st.floats(0, 500))
def test_exhaustive_some_rule_fires(rssi, speed, distance):
    res = infer(InputVector(rssi, speed, distance))
    assert max(res.firing.values()) > 0
    assert -100 <= res.score <= 100


@pytest.mark.parametrize("aggregation", ["rss", "rms"])
@pytest.mark.parametrize("tnorm", ["min", "product"])
def test_score_bounds_for_all_variants(aggregation, tnorm):
    cfg = FuzzyConfig(tnorm=tnorm, aggregation=aggregation)
    rng = random.Random(5)
    for _ in range(300):
        s = infer(InputVector(rng.uniform(0, 150), rng.uniform(0, 120), rng.uniform(0, 500)), cfg).score
        assert -100 <= s <= 100


def test_oracle_equivalence_1000_random_inputs():
    rng = random.Random(20120101)
    for _ in range(1000):
        rssi, speed, dist = rng.uniform(30, 120), rng.uniform(0, 40), rng.uniform(0, 200)
        assert infer(InputVector(rssi, speed, dist)).score == pytest.approx(oracle_score(rssi, speed, dist), abs=1e-9)


def test_config_round_trip():
    cfg = FuzzyConfig.from_dict(DEFAULT_CONFIG.to_dict())
    assert cfg == DEFAULT_CONFIG


def test_config_override_breakpoints():
    cfg = FuzzyConfig.from_dict({"variables": {"speed": {"Low": [0, 0, 5, 10]}}})
    assert cfg.variables["speed"].labels["Low"].as_tuple() == (0, 0, 5, 10)
    assert cfg.variables["rssi"] == DEFAULT_CONFIG.variables["rssi"]


def test_config_rejects_duplicate_rules():
    rules = [list(r.antecedent) + [r.consequent] for r in DEFAULT_RULES]
    rules[1] = rules[0]
    with pytest.raises(ValueError):
        FuzzyConfig.from_dict({"rules": rules})
