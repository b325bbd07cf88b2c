"""Dynamic trust: drift/penalty oracles, closed-form recovery, graded access."""

from __future__ import annotations

import numpy as np
import pytest

from sentinelsim.config import TrustConfig
from sentinelsim.events import Domain, EntityKind, EntityRef, EventKind
from sentinelsim.trust import (
    KIND_SENSITIVITY,
    AccessContext,
    Sensitivity,
    apply_incident_penalty,
    evaluate_access,
    initial_trust_state,
    risk_baseline,
    update_trust,
)

CFG = TrustConfig()
ENTITY = EntityRef(kind=EntityKind.Service, id="svc-1", tenant="t-a")


def fresh(trust: float | None = None):
    state = initial_trust_state(ENTITY, CFG)
    if trust is not None:
        state = state.__class__(entity=state.entity, trust=trust)
    return state


# ----------------------------------------------------------------------------
# Drift
# ----------------------------------------------------------------------------

def test_drift_oracle_quiet_behavior():
    # target = (1-0)*(1-0) = 1; 0.5 + 0.05*(1-0.5) = 0.525
    state = update_trust(fresh(0.5), anomaly=0.0, intel_match=0.0, cfg=CFG)
    assert state.trust == pytest.approx(0.525, abs=1e-12)


def test_drift_oracle_with_intel_correlation():
    # target = (1-0.2)*(1-0.5*1.0) = 0.4; 0.6 + 0.05*(0.4-0.6) = 0.59
    state = update_trust(fresh(0.6), anomaly=0.2, intel_match=1.0, cfg=CFG)
    assert state.trust == pytest.approx(0.59, abs=1e-12)


def test_fully_anomalous_behavior_pulls_toward_zero():
    state = fresh(0.8)
    for _ in range(500):
        state = update_trust(state, anomaly=1.0, intel_match=0.0, cfg=CFG)
    assert state.trust < 1e-9


def test_recovery_matches_closed_form():
    # With target pinned at 1 (perfectly quiet entity), after k updates:
    # trust_k = 1 - (1 - trust_0) * (1 - lr)^k
    rng = np.random.default_rng(21)
    for _ in range(1_000):
        t0 = float(rng.uniform(0.0, 1.0))
        k = int(rng.integers(1, 120))
        state = fresh(t0)
        for _ in range(k):
            state = update_trust(state, anomaly=0.0, intel_match=0.0, cfg=CFG)
        expected = 1.0 - (1.0 - t0) * (1.0 - CFG.learning_rate) ** k
        assert state.trust == pytest.approx(expected, abs=1e-9)


def test_trust_stays_in_unit_interval_under_random_history():
    rng = np.random.default_rng(22)
    for _ in range(1_000):
        state = fresh(float(rng.uniform(0, 1)))
        for _ in range(int(rng.integers(1, 25))):
            if rng.random() < 0.85:
                state = update_trust(
                    state, float(rng.uniform(0, 1)), float(rng.uniform(0, 1)), CFG
                )
            else:
                state = apply_incident_penalty(state, float(rng.uniform(0.5, 1.0)), CFG)
        assert 0.0 <= state.trust <= 1.0


def test_update_validates_input_ranges():
    with pytest.raises(ValueError):
        update_trust(fresh(), anomaly=1.5, intel_match=0.0, cfg=CFG)
    with pytest.raises(ValueError):
        update_trust(fresh(), anomaly=0.0, intel_match=-0.1, cfg=CFG)


def test_update_records_timestamp_only_when_given():
    state = update_trust(fresh(), 0.0, 0.0, CFG, ts=12345)
    assert state.last_update_ts == 12345
    state2 = update_trust(state, 0.0, 0.0, CFG)
    assert state2.last_update_ts == 12345


# ----------------------------------------------------------------------------
# Incident penalty
# ----------------------------------------------------------------------------

def test_penalty_oracle_full_severity():
    # 0.8 * (1 - 0.5*1.0) = 0.4
    state = apply_incident_penalty(fresh(0.8), action_severity=1.0, cfg=CFG)
    assert state.trust == pytest.approx(0.4, abs=1e-12)
    assert state.incident_count == 1


def test_penalty_oracle_moderate_severity():
    # 0.8 * (1 - 0.5*0.5) = 0.6
    state = apply_incident_penalty(fresh(0.8), action_severity=0.5, cfg=CFG)
    assert state.trust == pytest.approx(0.6, abs=1e-12)


def test_penalty_rejects_soft_actions():
    with pytest.raises(ValueError):
        apply_incident_penalty(fresh(), action_severity=0.2, cfg=CFG)


def test_penalties_compound_multiplicatively():
    state = fresh(1.0)
    for _ in range(3):
        state = apply_incident_penalty(state, 0.9, CFG)
    assert state.trust == pytest.approx((1 - 0.45) ** 3, abs=1e-12)
    assert state.incident_count == 3


# ----------------------------------------------------------------------------
# Access baselines
# ----------------------------------------------------------------------------

def ctx(sens: Sensitivity, threat: float = 0.0) -> AccessContext:
    return AccessContext(
        resource_sensitivity=sens, domain=Domain.Api, active_threat_level=threat
    )


def test_baseline_oracles_per_sensitivity():
    assert risk_baseline(ctx(Sensitivity.Low), CFG) == pytest.approx(0.30)
    assert risk_baseline(ctx(Sensitivity.Medium), CFG) == pytest.approx(0.40)
    assert risk_baseline(ctx(Sensitivity.High), CFG) == pytest.approx(0.55)


def test_baseline_rises_with_threat_level():
    # High sensitivity at full threat: 0.3 + 0.25 + 0.15*1.0 = 0.70
    assert risk_baseline(ctx(Sensitivity.High, threat=1.0), CFG) == pytest.approx(0.70)
    assert risk_baseline(ctx(Sensitivity.Low, threat=0.5), CFG) == pytest.approx(0.375)


def test_baseline_cap_binds():
    hot = TrustConfig(threat_coefficient=0.9)
    assert risk_baseline(ctx(Sensitivity.High, threat=1.0), hot) == pytest.approx(
        hot.baseline_cap
    )


def test_access_granted_at_exact_boundary():
    decision = evaluate_access(fresh(0.30), ctx(Sensitivity.Low), CFG)
    assert decision.granted
    assert decision.margin == pytest.approx(0.0, abs=1e-12)


def test_access_denied_below_baseline_with_margin():
    decision = evaluate_access(fresh(0.25), ctx(Sensitivity.Low), CFG)
    assert not decision.granted
    assert decision.margin == pytest.approx(-0.05, abs=1e-12)
    assert decision.baseline_at_decision == pytest.approx(0.30)
    assert decision.trust_at_decision == pytest.approx(0.25)


def test_initial_trust_passes_low_but_not_high_sensitivity():
    state = fresh()  # 0.6 by default
    assert evaluate_access(state, ctx(Sensitivity.Low), CFG).granted
    assert evaluate_access(state, ctx(Sensitivity.High), CFG).granted
    # under elevated threat the high-sensitivity bar moves out of reach:
    # 0.3 + 0.25 + 0.15*0.5 = 0.625 > 0.6
    assert not evaluate_access(state, ctx(Sensitivity.High, threat=0.5), CFG).granted


def test_every_event_kind_has_a_sensitivity():
    assert set(KIND_SENSITIVITY) == set(EventKind)
    assert KIND_SENSITIVITY[EventKind.ConfigChange] is Sensitivity.High
