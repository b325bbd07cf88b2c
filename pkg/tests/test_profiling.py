"""Behavioral profiling: running-statistics oracles and scoring properties.

Oracle values are hand-computed from the documented recurrences; every
frozen constant's derivation is shown next to the assertion.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from sentinelsim.config import ProfilingConfig
from sentinelsim.events import EntityKind, EntityRef
from sentinelsim.profiling import (
    AnomalyAssessment,
    BehaviorProfile,
    CategoricalStat,
    FeatureStat,
    assess,
    categorical_feature_score,
    numeric_feature_score,
    profile_snapshot,
    update_peer_profile,
    update_profile,
)

from conftest import build_view

CFG = ProfilingConfig()


def make_profile(entity_id: str = "svc-1", tenant: str = "t-a") -> BehaviorProfile:
    return BehaviorProfile(
        entity=EntityRef(kind=EntityKind.Service, id=entity_id, tenant=tenant)
    )


# ----------------------------------------------------------------------------
# FeatureStat: exponentially weighted mean/variance
# ----------------------------------------------------------------------------

def test_first_observation_initializes_mean_and_zero_variance():
    stat = FeatureStat()
    stat.update(42.0, decay=0.05)
    assert stat.ew_mean == 42.0
    assert stat.ew_var == 0.0
    assert stat.count == 1


def test_ew_update_recurrence_hand_computed():
    # mean' = 0.95*mean + 0.05*x ; var' = 0.95*var + 0.05*(x-mean)*(x-mean')
    stat = FeatureStat()
    stat.update(10.0, 0.05)
    stat.update(20.0, 0.05)
    # mean = 0.95*10 + 0.05*20 = 10.5
    # var  = 0.95*0 + 0.05*(20-10)*(20-10.5) = 0.05*10*9.5 = 4.75
    assert stat.ew_mean == pytest.approx(10.5, abs=1e-12)
    assert stat.ew_var == pytest.approx(4.75, abs=1e-12)


def test_constant_input_contracts_variance_to_zero():
    stat = FeatureStat()
    stat.update(7.0, 0.05)
    stat.update(100.0, 0.05)  # kick the variance up
    for _ in range(500):
        stat.update(7.0, 0.05)
    assert stat.ew_var < 1e-6
    assert stat.ew_mean == pytest.approx(7.0, abs=1e-3)


def test_alternating_input_converges_to_closed_form_two_cycle():
    # Alternating 0, 20 at decay 0.05 settles into a two-cycle. Solving
    # m_low = 0.95*(0.95*m_low + 0.05*20) gives m_low = 0.95/0.0975 * 1
    # = 9.743589..., and m_high = 0.95*m_low + 1 = 10.256410...
    m_low = 0.95 / (1.0 - 0.95 * 0.95)
    m_high = 0.95 * m_low + 1.0
    stat = FeatureStat()
    for i in range(2000):
        stat.update(20.0 if i % 2 == 0 else 0.0, 0.05)
    assert stat.ew_mean == pytest.approx(m_low, abs=1e-9)  # last input was 0
    stat.update(20.0, 0.05)
    assert stat.ew_mean == pytest.approx(m_high, abs=1e-9)


def test_ew_mean_matches_brute_force_weighted_sum():
    # After n updates, the EW mean is the decayed weighted sum
    # (1-d)^(n-1)*x0 + sum_{i>=1} d*(1-d)^(n-1-i)*x_i. 1,000 random cases.
    rng = np.random.default_rng(11)
    for _ in range(1_000):
        n = int(rng.integers(1, 12))
        xs = rng.normal(0, 10, size=n)
        d = float(rng.uniform(0.01, 0.5))
        stat = FeatureStat()
        for x in xs:
            stat.update(float(x), d)
        expected = xs[0] * (1 - d) ** (n - 1)
        for i in range(1, n):
            expected += d * (1 - d) ** (n - 1 - i) * xs[i]
        assert stat.ew_mean == pytest.approx(expected, abs=1e-9)


def test_variance_never_negative_under_random_updates():
    rng = np.random.default_rng(12)
    for _ in range(1_000):
        stat = FeatureStat()
        for _ in range(int(rng.integers(1, 30))):
            stat.update(float(rng.normal(0, 100)), float(rng.uniform(0.01, 0.9)))
        assert stat.ew_var >= 0.0


# ----------------------------------------------------------------------------
# CategoricalStat: decayed value counts
# ----------------------------------------------------------------------------

def test_categorical_total_tracks_sum_of_counts():
    rng = np.random.default_rng(13)
    values = ["a", "b", "c", "d"]
    for _ in range(200):
        stat = CategoricalStat()
        for _ in range(int(rng.integers(1, 50))):
            stat.update(values[int(rng.integers(4))], 0.05)
        assert stat.total == pytest.approx(sum(stat.counts.values()), abs=1e-9)


def test_categorical_steady_state_total_is_one_over_decay():
    stat = CategoricalStat()
    for _ in range(2_000):
        stat.update("only", 0.05)
    assert stat.total == pytest.approx(1.0 / 0.05, abs=1e-6)


def test_single_valued_habit_scores_low_and_novelty_scores_high():
    # {only: 100}: score(only) = 1 - 101/(100 + 1*(1+1)) = 1 - 101/102
    stat = CategoricalStat(counts={"only": 100.0}, total=100.0)
    assert categorical_feature_score(stat, "only", CFG) == pytest.approx(
        1.0 - 101.0 / 102.0, abs=1e-12
    )
    # unseen value: 1 - 1/102
    assert categorical_feature_score(stat, "novel", CFG) == pytest.approx(
        1.0 - 1.0 / 102.0, abs=1e-12
    )


def test_minority_value_scores_above_half_at_steady_state():
    # A 70/30 habit at decayed total 20: the 30% value scores
    # 1 - (6+1)/(20+3) = 0.6956... — minority habits look anomalous
    # forever, which is why scenario habits are written single-valued.
    stat = CategoricalStat(counts={"major": 14.0, "minor": 6.0}, total=20.0)
    assert categorical_feature_score(stat, "minor", CFG) == pytest.approx(
        1.0 - 7.0 / 23.0, abs=1e-12
    )
    assert categorical_feature_score(stat, "minor", CFG) > 0.5
    assert categorical_feature_score(stat, "major", CFG) < 0.5


def test_rare_value_score_oracle():
    # {US: 99, CN: 1}: score(CN) = 1 - (1+1)/(100 + 1*3) = 1 - 2/103
    stat = CategoricalStat(counts={"US": 99.0, "CN": 1.0}, total=100.0)
    assert categorical_feature_score(stat, "CN", CFG) == pytest.approx(
        0.9805825242718447, abs=1e-12
    )


def test_categorical_score_bounded_in_unit_interval():
    rng = np.random.default_rng(14)
    for _ in range(1_000):
        stat = CategoricalStat()
        for _ in range(int(rng.integers(0, 40))):
            stat.update(f"v{int(rng.integers(6))}", float(rng.uniform(0.01, 0.5)))
        probe = f"v{int(rng.integers(8))}"  # sometimes unseen
        score = categorical_feature_score(stat, probe, CFG)
        assert 0.0 <= score < 1.0


# ----------------------------------------------------------------------------
# Numeric scoring
# ----------------------------------------------------------------------------

def test_logistic_score_oracle_at_zero_and_twice_midpoint():
    # z = 0 -> 1/(1+e^3); z = 6 -> 1/(1+e^-3)
    stat = FeatureStat(ew_mean=10.0, ew_var=4.0, count=50)
    assert numeric_feature_score(stat, 10.0, CFG) == pytest.approx(
        0.04742587317756678, abs=1e-15
    )
    assert numeric_feature_score(stat, 22.0, CFG) == pytest.approx(
        0.9525741268224334, abs=1e-15
    )


def test_three_sigma_scores_exactly_one_half():
    stat = FeatureStat(ew_mean=0.0, ew_var=1.0, count=10)
    assert numeric_feature_score(stat, 3.0, CFG) == pytest.approx(0.5, abs=1e-12)


def test_numeric_score_monotone_in_deviation():
    stat = FeatureStat(ew_mean=5.0, ew_var=9.0, count=30)
    xs = [5.0, 6.0, 8.0, 11.0, 20.0, 50.0]
    scores = [numeric_feature_score(stat, x, CFG) for x in xs]
    assert scores == sorted(scores)
    assert all(0.0 < s < 1.0 for s in scores)


def test_variance_floor_guards_degenerate_baseline():
    stat = FeatureStat(ew_mean=10.0, ew_var=0.0, count=5)
    assert numeric_feature_score(stat, 10.0, CFG) == pytest.approx(
        1.0 / (1.0 + math.exp(3.0)), abs=1e-12
    )
    # any deviation against a zero-variance baseline saturates
    assert numeric_feature_score(stat, 10.001, CFG) > 0.999


def test_numeric_score_requires_history():
    with pytest.raises(ValueError):
        numeric_feature_score(FeatureStat(), 1.0, CFG)


# ----------------------------------------------------------------------------
# Profile updates
# ----------------------------------------------------------------------------

def test_update_profile_rejects_foreign_entity():
    profile = make_profile("svc-1")
    view = build_view(entity_id="svc-2")
    with pytest.raises(ValueError):
        update_profile(profile, view, CFG)


def test_update_profile_tracks_all_features_and_count():
    profile = make_profile()
    for i in range(5):
        update_profile(profile, build_view(ts=i), CFG)
    assert profile.event_count == 5
    assert set(profile.numeric) == {"request_rate", "payload_bytes"}
    assert set(profile.categorical) == {"geo", "hour_of_day", "device_fingerprint"}
    assert profile.numeric["request_rate"].count == 5


def test_peer_profile_accepts_any_entity():
    peer = make_profile("__aggregate__")
    update_peer_profile(peer, build_view(entity_id="svc-1"), CFG)
    update_peer_profile(peer, build_view(entity_id="svc-2"), CFG)
    assert peer.event_count == 2


# ----------------------------------------------------------------------------
# Assessment: blending and combining
# ----------------------------------------------------------------------------

def _mature(profile: BehaviorProfile, n: int = 40) -> BehaviorProfile:
    for i in range(n):
        update_profile(profile, build_view(ts=i, entity_id=profile.entity.id), CFG)
    return profile


def test_empty_event_scores_zero():
    profile = make_profile()
    peer = make_profile("__aggregate__")
    result = assess(profile, peer, build_view(numeric={}, categorical={}), CFG)
    assert result == AnomalyAssessment(score=0.0, factors=())


def test_score_is_mean_of_top_three_factors():
    rng = np.random.default_rng(15)
    profile = _mature(make_profile())
    peer = _mature(make_profile("__aggregate__"))
    for _ in range(300):
        view = build_view(
            numeric={
                "request_rate": float(rng.uniform(0, 60)),
                "payload_bytes": float(rng.uniform(0, 3000)),
            },
            categorical={
                "geo": rng.choice(["geo-us", "geo-xx"]),
                "hour_of_day": rng.choice(["9", "3"]),
                "device_fingerprint": rng.choice(["fp-1", "fp-evil"]),
            },
        )
        result = assess(profile, peer, view, CFG)
        top3 = sorted((f.score for f in result.factors), reverse=True)[:3]
        assert result.score == pytest.approx(sum(top3) / 3.0, abs=1e-12)
        assert 0.0 <= result.score <= 1.0
        assert len(result.factors) == 5  # 2 numeric + 3 categorical


def test_factors_sorted_by_score_then_name():
    profile = _mature(make_profile())
    peer = _mature(make_profile("__aggregate__"))
    result = assess(profile, peer, build_view(), CFG)
    keys = [(-f.score, f.feature) for f in result.factors]
    assert keys == sorted(keys)


def test_young_profile_blends_toward_peer():
    # Own profile knows mean 10; peer knows mean 100. At event_count=10
    # (maturity 0.5) the blended score is the exact midpoint of the two
    # single-source scores.
    own = make_profile()
    own.numeric["request_rate"] = FeatureStat(ew_mean=10.0, ew_var=4.0, count=10)
    own.event_count = 10
    peer = make_profile("__aggregate__")
    peer.numeric["request_rate"] = FeatureStat(ew_mean=100.0, ew_var=4.0, count=99)

    view = build_view(numeric={"request_rate": 10.0}, categorical={})
    s_own = numeric_feature_score(own.numeric["request_rate"], 10.0, CFG)
    s_peer = numeric_feature_score(peer.numeric["request_rate"], 10.0, CFG)
    result = assess(own, peer, view, CFG)
    assert result.factors[0].score == pytest.approx(0.5 * s_own + 0.5 * s_peer, abs=1e-12)


def test_brand_new_entity_scored_fully_against_peer():
    own = make_profile()
    peer = make_profile("__aggregate__")
    peer.numeric["request_rate"] = FeatureStat(ew_mean=10.0, ew_var=4.0, count=60)
    view = build_view(numeric={"request_rate": 22.0}, categorical={})
    result = assess(own, peer, view, CFG)
    assert result.factors[0].score == pytest.approx(
        numeric_feature_score(peer.numeric["request_rate"], 22.0, CFG), abs=1e-12
    )


def test_mature_profile_ignores_peer():
    own = make_profile()
    own.numeric["request_rate"] = FeatureStat(ew_mean=10.0, ew_var=4.0, count=25)
    own.event_count = 25  # past the maturity threshold of 20
    peer = make_profile("__aggregate__")
    peer.numeric["request_rate"] = FeatureStat(ew_mean=1000.0, ew_var=1.0, count=500)
    view = build_view(numeric={"request_rate": 10.0}, categorical={})
    result = assess(own, peer, view, CFG)
    assert result.factors[0].score == pytest.approx(
        numeric_feature_score(own.numeric["request_rate"], 10.0, CFG), abs=1e-12
    )


def test_assessment_score_bounded_for_random_streams():
    rng = np.random.default_rng(16)
    for case in range(50):
        profile = make_profile()
        peer = make_profile("__aggregate__")
        for i in range(int(rng.integers(0, 40))):
            view = build_view(
                ts=i,
                numeric={"request_rate": float(rng.gamma(2, 5))},
                categorical={"geo": f"g{int(rng.integers(3))}"},
            )
            result = assess(profile, peer, view, CFG)
            assert 0.0 <= result.score <= 1.0
            update_profile(profile, view, CFG)
            update_peer_profile(peer, view, CFG)


# ----------------------------------------------------------------------------
# Snapshot export
# ----------------------------------------------------------------------------

def test_snapshot_shape_and_top_n_truncation():
    profile = _mature(make_profile())
    for i in range(15):
        view = build_view(categorical={"geo": f"geo-{i:02d}"}, numeric={})
        update_profile(profile, view, CFG)
    snap = profile_snapshot(profile, top_n=10)
    assert snap["entity"] == "t-a:svc-1"
    assert snap["event_count"] == profile.event_count
    assert set(snap["numeric"]) == {"request_rate", "payload_bytes"}
    assert len(snap["categorical"]["geo"]) == 10  # truncated
    import json

    json.dumps(snap)  # JSON-serializable by construction
