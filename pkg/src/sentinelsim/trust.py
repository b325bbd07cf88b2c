"""Dynamic per-entity trust and graded access decisions.

Trust is a [0,1] score nudged toward a per-event target that rewards
unremarkable behavior and punishes correlation with threat intelligence;
executed mitigations take an immediate multiplicative bite. Access is
granted when trust meets a context-sensitive baseline that rises with
resource sensitivity and the current threat level — a graded comparison,
not a binary allow-list, and the margin is kept for explanations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .config import TrustConfig
from .events import Domain, EntityRef, EventKind


class Sensitivity(str, Enum):
    Low = "Low"
    Medium = "Medium"
    High = "High"


#: How sensitive the resource touched by each event kind is considered.
KIND_SENSITIVITY: dict[EventKind, Sensitivity] = {
    EventKind.ApiCall: Sensitivity.Low,
    EventKind.Login: Sensitivity.Low,
    EventKind.FileDownload: Sensitivity.Medium,
    EventKind.ProcessExec: Sensitivity.Medium,
    EventKind.ConfigChange: Sensitivity.High,
    EventKind.NetworkFlow: Sensitivity.Low,
}

_SENSITIVITY_INDEX = {Sensitivity.Low: 0, Sensitivity.Medium: 1, Sensitivity.High: 2}


@dataclass(frozen=True)
class TrustState:
    entity: EntityRef
    trust: float
    last_update_ts: int = 0
    incident_count: int = 0


@dataclass(frozen=True)
class AccessContext:
    resource_sensitivity: Sensitivity
    domain: Domain
    active_threat_level: float


@dataclass(frozen=True)
class AccessDecision:
    granted: bool
    trust_at_decision: float
    baseline_at_decision: float
    margin: float


def initial_trust_state(entity: EntityRef, cfg: TrustConfig, ts: int = 0) -> TrustState:
    return TrustState(entity=entity, trust=cfg.initial_trust, last_update_ts=ts)


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def update_trust(
    state: TrustState,
    anomaly: float,
    intel_match: float,
    cfg: TrustConfig,
    ts: int | None = None,
) -> TrustState:
    """Drift trust toward (1 - anomaly) * (1 - beta * intel_match)."""
    if not 0.0 <= anomaly <= 1.0:
        raise ValueError(f"anomaly out of range: {anomaly}")
    if not 0.0 <= intel_match <= 1.0:
        raise ValueError(f"intel_match out of range: {intel_match}")
    target = (1.0 - anomaly) * (1.0 - cfg.intel_weight * intel_match)
    new_trust = _clamp01(state.trust + cfg.learning_rate * (target - state.trust))
    return replace(state, trust=new_trust, last_update_ts=state.last_update_ts if ts is None else ts)


def apply_incident_penalty(state: TrustState, action_severity: float, cfg: TrustConfig) -> TrustState:
    """Multiplicative hit when a mitigation of severity >= 0.5 is executed."""
    if action_severity < 0.5:
        raise ValueError("incident penalty applies only to severity >= 0.5 actions")
    return replace(
        state,
        trust=_clamp01(state.trust * (1.0 - cfg.penalty_factor * action_severity)),
        incident_count=state.incident_count + 1,
    )


def risk_baseline(ctx: AccessContext, cfg: TrustConfig) -> float:
    offset = cfg.sensitivity_offsets[_SENSITIVITY_INDEX[ctx.resource_sensitivity]]
    return min(
        cfg.baseline_cap,
        cfg.baseline_floor + offset + cfg.threat_coefficient * ctx.active_threat_level,
    )


def evaluate_access(state: TrustState, ctx: AccessContext, cfg: TrustConfig) -> AccessDecision:
    """Grant iff trust meets the baseline. Equality grants — the boundary is
    deliberately inclusive so it can be pinned by tests."""
    baseline = risk_baseline(ctx, cfg)
    margin = state.trust - baseline
    return AccessDecision(
        granted=margin >= 0.0,
        trust_at_decision=state.trust,
        baseline_at_decision=baseline,
        margin=margin,
    )
