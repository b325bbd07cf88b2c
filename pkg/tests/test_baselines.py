"""Comparison systems: the static rule engine's calibration and precedence,
and the batch classifier's features, training determinism, and guard rails."""

from __future__ import annotations

import numpy as np
import pytest

from sentinelsim.agents import MitigationAction
from sentinelsim.baselines import (
    FeatureExtractor,
    GlobalStats,
    build_static_rules,
    classify,
    static_evaluate,
    train_classifier,
)
from sentinelsim.config import BaselineConfig
from sentinelsim.events import EventKind, load_scenario

from conftest import build_view, scenario_doc, scenario_text

CFG = BaselineConfig()


def spec_with_recurrence():
    doc = scenario_doc()
    doc["injections"][0]["params"]["device_fingerprint"] = "fp-bot"
    doc["injections"][0]["recurrence"] = {
        "start_ms": 480_000,
        "end_ms": 540_000,
        "overrides": {"credential_hash": "cred-stolen-2nd"},
    }
    return load_scenario(scenario_text(doc))


# ----------------------------------------------------------------------------
# Static rules: calibration
# ----------------------------------------------------------------------------

def test_thresholds_take_most_permissive_configured_entity():
    rules = build_static_rules(load_scenario(scenario_text(scenario_doc())), CFG)
    # svc-1: rate 10+/-2, payload 500+/-100; user-1: 5+/-1, 200+/-40
    assert rules.numeric_thresholds["request_rate"] == pytest.approx(16.0)   # 10+3*2
    assert rules.numeric_thresholds["payload_bytes"] == pytest.approx(800.0)  # 500+3*100


def test_signature_pack_covers_scripted_campaigns_only():
    rules = build_static_rules(spec_with_recurrence(), CFG)
    assert rules.geo_blocklist == frozenset({"geo-xx"})
    assert rules.signatures == frozenset({
        ("credential_hash", "cred-stolen"),
        ("credential_hash", "cred-stolen-2nd"),  # recurrence override is known
        ("device_fingerprint", "fp-bot"),
    })


def test_zero_day_contributes_no_signature():
    doc = scenario_doc()
    doc["injections"].append({
        "family": "ZeroDay",
        "start_ms": 0,
        "end_ms": 60_000,
        "params": {"tenant": "t-a", "entity_id": "svc-1", "novel_geo": "geo-zz",
                   "novel_device_fingerprint": "fp-novel"},
    })
    rules = build_static_rules(load_scenario(scenario_text(doc)), CFG)
    assert "geo-zz" not in rules.geo_blocklist
    assert all(v != "fp-novel" for _, v in rules.signatures)


def test_lateral_movement_signs_the_rogue_peer():
    doc = scenario_doc()
    doc["injections"].append({
        "family": "LateralMovement",
        "start_ms": 0,
        "end_ms": 60_000,
        "params": {"tenant": "t-a", "entity_id": "svc-1", "peer_service": "svc-shadow"},
    })
    rules = build_static_rules(load_scenario(scenario_text(doc)), CFG)
    assert ("peer_service", "svc-shadow") in rules.signatures


# ----------------------------------------------------------------------------
# Static rules: evaluation order and outcomes
# ----------------------------------------------------------------------------

def eval_view(**kwargs):
    rules = build_static_rules(spec_with_recurrence(), CFG)
    return static_evaluate(rules, build_view(**kwargs))


def test_quiet_traffic_passes():
    assert eval_view() is None


def test_threshold_breach_throttles():
    action, reason = eval_view(numeric={"request_rate": 16.1, "payload_bytes": 100.0})
    assert action is MitigationAction.Throttle
    assert reason.startswith("threshold:request_rate")
    # exactly at the threshold: quiet (strict inequality)
    assert eval_view(numeric={"request_rate": 16.0, "payload_bytes": 100.0}) is None


def test_blocklisted_geo_alerts():
    action, reason = eval_view(
        categorical={"geo": "geo-xx", "hour_of_day": "9", "device_fingerprint": "fp-1"})
    assert action is MitigationAction.Alert
    assert reason == "blocklist:geo=geo-xx"


def test_signature_hit_alerts():
    action, reason = eval_view(
        categorical={"geo": "geo-us", "hour_of_day": "9",
                     "device_fingerprint": "fp-1", "credential_hash": "cred-stolen-2nd"})
    assert action is MitigationAction.Alert
    assert reason == "signature:credential_hash=cred-stolen-2nd"


def test_threshold_outranks_categorical_hits():
    action, reason = eval_view(
        numeric={"request_rate": 50.0, "payload_bytes": 100.0},
        categorical={"geo": "geo-xx", "hour_of_day": "9", "device_fingerprint": "fp-bot"})
    assert action is MitigationAction.Throttle
    assert reason.startswith("threshold:")


# ----------------------------------------------------------------------------
# Classifier: global stats and features
# ----------------------------------------------------------------------------

def test_global_stats_frequencies():
    views = [
        build_view(numeric={"request_rate": 10.0, "payload_bytes": 100.0},
                   categorical={"geo": "geo-us", "hour_of_day": "9",
                                "device_fingerprint": "fp-1"}),
        build_view(numeric={"request_rate": 20.0, "payload_bytes": 300.0},
                   categorical={"geo": "geo-us", "hour_of_day": "10",
                                "device_fingerprint": "fp-1"}),
        build_view(numeric={"request_rate": 30.0, "payload_bytes": 200.0},
                   categorical={"geo": "geo-de", "hour_of_day": "9",
                                "device_fingerprint": "fp-1"}),
    ]
    stats = GlobalStats.fit(views)
    assert stats.rate_mean == pytest.approx(20.0)
    assert stats.rate_std == pytest.approx(np.std([10, 20, 30]))
    assert stats.geo_freq == {"geo-us": pytest.approx(2 / 3), "geo-de": pytest.approx(1 / 3)}
    assert stats.hour_freq["9"] == pytest.approx(2 / 3)


def test_feature_vector_oracle():
    stats = GlobalStats.fit([
        build_view(numeric={"request_rate": 10.0, "payload_bytes": 400.0},
                   categorical={"geo": "geo-us", "hour_of_day": "9",
                                "device_fingerprint": "fp-1"}),
        build_view(numeric={"request_rate": 20.0, "payload_bytes": 600.0},
                   categorical={"geo": "geo-us", "hour_of_day": "9",
                                "device_fingerprint": "fp-1"}),
    ])
    fx = FeatureExtractor(stats, CFG.burst_window_ms)
    got = fx.features(build_view(
        numeric={"request_rate": 20.0, "payload_bytes": 500.0},
        categorical={"geo": "geo-cn", "hour_of_day": "3", "device_fingerprint": "fp-1"},
    ))
    # rate mean 15 std 5 -> z=1; payload mean 500 std 100 -> z=0
    # geo-cn unseen -> rarity 1; hour 3 unseen -> deviation 1; no logins yet
    assert got == pytest.approx([1.0, 0.0, 1.0, 1.0, 0.0])


def test_login_burst_counts_preceding_window_only():
    stats = GlobalStats.fit([build_view()])
    fx = FeatureExtractor(stats, burst_window_ms=60_000)
    bursts = []
    for ts in [0, 10_000, 20_000, 70_000]:
        f = fx.features(build_view(ts=ts, kind=EventKind.Login))
        bursts.append(f[4])
    # each event sees how many logins came before it inside the window;
    # at t=70s the t=0 login has aged out (cutoff 10s, kept inclusively)
    assert bursts == [0.0, 1.0, 2.0, 2.0]


def test_login_burst_ignores_non_login_kinds_and_other_entities():
    stats = GlobalStats.fit([build_view()])
    fx = FeatureExtractor(stats, burst_window_ms=60_000)
    fx.features(build_view(ts=0, kind=EventKind.ApiCall))
    fx.features(build_view(ts=1, kind=EventKind.Login, entity_id="other"))
    f = fx.features(build_view(ts=2, kind=EventKind.Login))
    assert f[4] == 0.0


# ----------------------------------------------------------------------------
# Classifier: training
# ----------------------------------------------------------------------------

def separable_data(n=200, seed=11):
    rng = np.random.default_rng(seed)
    benign = rng.normal(0.0, 1.0, size=(n, 5))
    attack = rng.normal(3.0, 1.0, size=(n, 5))
    x = np.vstack([benign, attack])
    y = np.concatenate([np.zeros(n), np.ones(n)])
    return x, y


def test_training_separates_shifted_classes():
    x, y = separable_data()
    model = train_classifier(x, y, CFG)
    hits = sum(classify(model, row)[1] for row in x[200:])
    false_alarms = sum(classify(model, row)[1] for row in x[:200])
    assert hits >= 190
    assert false_alarms <= 10


def test_training_is_deterministic_and_order_independent():
    x, y = separable_data()
    a = train_classifier(x, y, CFG)
    b = train_classifier(x, y, CFG)
    assert a.weights_digest() == b.weights_digest()
    # full-batch gradients: shuffling rows changes nothing but float order;
    # same multiset of rows -> same sums up to permutation error
    perm = np.random.default_rng(0).permutation(len(x))
    c = train_classifier(x[perm], y[perm], CFG)
    assert np.allclose(c.weights, a.weights, atol=1e-9)
    assert c.bias == pytest.approx(a.bias, abs=1e-9)


def test_single_class_slice_degrades_to_always_benign():
    x = np.random.default_rng(1).normal(size=(50, 5))
    model = train_classifier(x, np.zeros(50), CFG)
    assert model.always_benign
    score, hit = classify(model, np.full(5, 100.0))
    assert (score, hit) == (0.0, False)
    # all-malicious slice degrades the same way
    assert train_classifier(x, np.ones(50), CFG).always_benign


def test_empty_training_slice_raises():
    with pytest.raises(ValueError):
        train_classifier(np.empty((0, 5)), np.empty(0), CFG)


def test_untrained_model_refuses_to_classify():
    from sentinelsim.baselines import LinearClassifierModel
    model = LinearClassifierModel(
        weights=np.zeros(5), bias=0.0, feature_mean=np.zeros(5),
        feature_std=np.ones(5), threshold=0.5, trained=False,
    )
    with pytest.raises(ValueError):
        classify(model, np.zeros(5))


def test_scores_live_on_unit_interval():
    x, y = separable_data(seed=12)
    model = train_classifier(x, y, CFG)
    rng = np.random.default_rng(13)
    for _ in range(1_000):
        score, hit = classify(model, rng.normal(0, 10, size=5))
        assert 0.0 <= score <= 1.0
        assert hit is (score >= CFG.threshold)


def test_model_export_shape():
    x, y = separable_data()
    doc = train_classifier(x, y, CFG).to_dict()
    assert doc["features"] == ["rate_z", "payload_z", "geo_rarity",
                               "hour_deviation", "login_burst"]
    assert len(doc["weights"]) == 5
    assert doc["always_benign"] is False
    assert doc["threshold"] == 0.5
