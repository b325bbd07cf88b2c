"""Autonomous mitigation agents.

One agent owns one (tenant, domain) slice of traffic. For each event it
fuses three signals — behavioral anomaly, entity trust, threat-intel match
— into a risk score, discretizes the situation into a context bucket, and
picks a mitigation with an epsilon-greedy policy over learned action
values. Rewards arrive later (delayed ground truth or analyst feedback)
and pull the action values around; every decision carries its inputs and
factor list so the choice can be audited afterwards.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .config import AgentConfig, FusionConfig, RewardConfig
from .events import Domain, EntityRef, EventKind, GroundTruth


class MitigationAction(str, Enum):
    # Declaration order is a documented tie-break; do not reorder.
    Allow = "Allow"
    Alert = "Alert"
    Throttle = "Throttle"
    StepUpAuth = "StepUpAuth"
    PauseSession = "PauseSession"
    RevokeToken = "RevokeToken"
    QuarantineContainer = "QuarantineContainer"
    BlockIndicator = "BlockIndicator"


ACTION_SEVERITY: dict[MitigationAction, float] = {
    MitigationAction.Allow: 0.0,
    MitigationAction.Alert: 0.2,
    MitigationAction.Throttle: 0.5,
    MitigationAction.StepUpAuth: 0.5,
    MitigationAction.PauseSession: 0.7,
    MitigationAction.RevokeToken: 0.7,
    MitigationAction.QuarantineContainer: 0.9,
    MitigationAction.BlockIndicator: 0.9,
}

_ACTION_ORDER = {action: i for i, action in enumerate(MitigationAction)}

DOMAIN_ACTIONS: dict[Domain, tuple[MitigationAction, ...]] = {
    Domain.Api: (
        MitigationAction.Allow,
        MitigationAction.Alert,
        MitigationAction.Throttle,
        MitigationAction.RevokeToken,
        MitigationAction.PauseSession,
    ),
    Domain.Endpoint: (
        MitigationAction.Allow,
        MitigationAction.Alert,
        MitigationAction.StepUpAuth,
        MitigationAction.QuarantineContainer,
    ),
    Domain.Network: (
        MitigationAction.Allow,
        MitigationAction.Alert,
        MitigationAction.Throttle,
        MitigationAction.BlockIndicator,
    ),
}


class RiskBand(str, Enum):
    Low = "Low"
    Medium = "Medium"
    High = "High"


_BAND_CENTER = {RiskBand.Low: 0.1, RiskBand.Medium: 0.55, RiskBand.High: 0.85}


def risk_band(risk: float) -> RiskBand:
    if risk < 0.4:
        return RiskBand.Low
    if risk < 0.7:
        return RiskBand.Medium
    return RiskBand.High


@dataclass(frozen=True)
class ContextBucket:
    domain: Domain
    band: RiskBand
    intel_present: bool

    def key(self) -> str:
        return f"{self.domain.value}/{self.band.value}/{'intel' if self.intel_present else 'clear'}"


class DecisionStatus(str, Enum):
    Autonomous = "Autonomous"
    PendingReview = "PendingReview"
    Overridden = "Overridden"


@dataclass(frozen=True)
class RationaleFactor:
    name: str
    score: float
    detail: str


@dataclass
class Decision:
    id: str
    ts: int
    event_id: str
    entity: EntityRef
    domain: Domain
    event_kind: EventKind
    risk: float
    anomaly: float
    trust_at: float
    intel_match: float
    bucket: ContextBucket
    action: MitigationAction
    rationale: tuple[RationaleFactor, ...]
    status: DecisionStatus
    latency_ms: float
    path: str  # "agent" | "rule" | "enforcement" | "classifier" | "static"
    rule_id: Optional[str] = None
    feedback_applied: bool = False

    @property
    def severity(self) -> float:
        return ACTION_SEVERITY[self.action]


@dataclass(frozen=True)
class FeedbackRecord:
    decision_id: str
    score: float
    override: Optional[MitigationAction]
    ts: int

    def __post_init__(self) -> None:
        if not -1.0 <= self.score <= 1.0:
            raise ValueError(f"operator score out of range: {self.score}")


def fuse_risk(anomaly: float, trust: float, intel_match: float, cfg: FusionConfig) -> float:
    for name, value in (("anomaly", anomaly), ("trust", trust), ("intel_match", intel_match)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} out of range: {value}")
    risk = (
        cfg.anomaly_weight * anomaly
        + cfg.trust_weight * (1.0 - trust)
        + cfg.intel_weight * intel_match
    )
    return min(1.0, max(0.0, risk))


def initial_q(bucket: ContextBucket, reward: RewardConfig = RewardConfig()) -> dict[MitigationAction, float]:
    """Day-zero prior: each action starts at its expected reward if the
    bucket's band center were the probability that traffic here is
    malicious (assuming containment takes severity >= 0.5).

    Low-band buckets therefore open on Allow and high-band buckets on real
    containment — and, critically, no action starts above what its own
    reward stream could sustain. A prior that overvalued Alert on low-risk
    traffic, say, would have to be ground down through a false-positive
    burst every time values drifted, because steady benign traffic pulls
    q(Allow) toward the small benign reward, not toward the prior."""
    p = _BAND_CENTER[bucket.band]
    out = {}
    for action in DOMAIN_ACTIONS[bucket.domain]:
        severity = ACTION_SEVERITY[action]
        if_malicious = reward.contained if severity >= 0.5 else reward.under_mitigated
        if_benign = (
            reward.benign_allow if action is MitigationAction.Allow
            else reward.false_positive_cost * severity
        )
        out[action] = p * if_malicious + (1.0 - p) * if_benign
    return out


@dataclass
class AgentState:
    tenant: str
    domain: Domain
    epsilon: float
    q: dict[ContextBucket, dict[MitigationAction, float]] = field(default_factory=dict)
    memory: deque = field(default_factory=lambda: deque(maxlen=256))
    policy_version: int = 0

    def q_for(self, bucket: ContextBucket) -> dict[MitigationAction, float]:
        if bucket.domain != self.domain:
            raise ValueError(f"bucket {bucket.key()} not owned by {self.domain.value} agent")
        table = self.q.get(bucket)
        if table is None:
            table = self.q[bucket] = initial_q(bucket)
        return table


def epsilon_at(progress: float, cfg: AgentConfig) -> float:
    """Linear exploration decay over run progress in [0, 1]."""
    p = min(1.0, max(0.0, progress))
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * p


def select_action(agent: AgentState, bucket: ContextBucket, rng: np.random.Generator) -> MitigationAction:
    allowed = DOMAIN_ACTIONS[bucket.domain]
    table = agent.q_for(bucket)
    if rng.random() < agent.epsilon:
        return allowed[int(rng.integers(len(allowed)))]
    best = max(
        allowed,
        key=lambda a: (table[a], -ACTION_SEVERITY[a], -_ACTION_ORDER[a]),
    )
    return best


def escalate_to_mitigation(domain: Domain, action: MitigationAction) -> MitigationAction:
    """Raise a too-soft action to the lowest >= 0.5-severity action of the
    domain. Used when trust-based access evaluation denies the request:
    a denied request must at least face a real control, whatever the
    bandit felt like doing."""
    if ACTION_SEVERITY[action] >= 0.5:
        return action
    candidates = [a for a in DOMAIN_ACTIONS[domain] if ACTION_SEVERITY[a] >= 0.5]
    return min(candidates, key=lambda a: (ACTION_SEVERITY[a], _ACTION_ORDER[a]))


def decide(
    agent: AgentState,
    decision_id: str,
    event_id: str,
    ts: int,
    entity: EntityRef,
    event_kind: EventKind,
    anomaly: float,
    anomaly_factors: tuple,
    trust_at: float,
    intel_match: float,
    access_granted: bool,
    access_margin: float,
    latency_ms: float,
    rng: np.random.Generator,
    fusion: FusionConfig,
    agent_cfg: AgentConfig,
    reviewer_attached: bool = False,
) -> Decision:
    risk = fuse_risk(anomaly, trust_at, intel_match, fusion)
    bucket = ContextBucket(domain=agent.domain, band=risk_band(risk), intel_present=intel_match > 0.0)
    action = select_action(agent, bucket, rng)
    if not access_granted:
        action = escalate_to_mitigation(agent.domain, action)

    rationale = [
        RationaleFactor(name=f.feature, score=round(f.score, 6), detail=f.observed)
        for f in anomaly_factors[:5]
    ]
    rationale.append(RationaleFactor(name="trust_margin", score=round(access_margin, 6),
                                     detail="granted" if access_granted else "denied"))
    if intel_match > 0.0:
        rationale.append(RationaleFactor(name="intel_match", score=round(intel_match, 6), detail="indicator"))

    severity = ACTION_SEVERITY[action]
    status = (
        DecisionStatus.PendingReview
        if reviewer_attached and risk >= agent_cfg.review_min_risk and severity >= agent_cfg.review_min_severity
        else DecisionStatus.Autonomous
    )
    decision = Decision(
        id=decision_id,
        ts=ts,
        event_id=event_id,
        entity=entity,
        domain=agent.domain,
        event_kind=event_kind,
        risk=risk,
        anomaly=anomaly,
        trust_at=trust_at,
        intel_match=intel_match,
        bucket=bucket,
        action=action,
        rationale=tuple(rationale),
        status=status,
        latency_ms=latency_ms,
        path="agent",
    )
    agent.memory.append(decision.id)
    return decision


def reward_for(truth: GroundTruth, action: MitigationAction, cfg: RewardConfig) -> float:
    """Outcome-based reward, revealed only after the disclosure delay.

    Containment of a real attack pays +1; an under-mitigated attack costs
    -1; leaving benign traffic alone pays a little; any mitigation of
    benign traffic costs proportionally to how heavy-handed it was.
    """
    severity = ACTION_SEVERITY[action]
    if truth.malicious:
        return cfg.contained if severity >= truth.required_severity else cfg.under_mitigated
    if action is MitigationAction.Allow:
        return cfg.benign_allow
    return cfg.false_positive_cost * severity


def learn(agent: AgentState, decision: Decision, reward: float, cfg: AgentConfig) -> None:
    table = agent.q_for(decision.bucket)
    q = table[decision.action]
    q = q + cfg.learning_rate * (reward - q)
    table[decision.action] = min(cfg.q_max, max(cfg.q_min, q))
    agent.policy_version += 1


def apply_feedback(
    agent: AgentState,
    fb: FeedbackRecord,
    decision: Decision,
    cfg: AgentConfig,
) -> Optional[MitigationAction]:
    """Analyst feedback: score becomes the reward; an override additionally
    marks the decision, gets endorsed in the value table, and is returned
    for enforcement by the caller."""
    if fb.decision_id != decision.id:
        raise ValueError("feedback does not reference this decision")
    if fb.override is not None and fb.override not in DOMAIN_ACTIONS[decision.domain]:
        raise ValueError(
            f"override {fb.override.value} not valid for domain {decision.domain.value}"
        )
    learn(agent, decision, fb.score, cfg)
    decision.feedback_applied = True
    if fb.override is None:
        return None
    table = agent.q_for(decision.bucket)
    q = table[fb.override]
    table[fb.override] = min(cfg.q_max, max(cfg.q_min, q + cfg.learning_rate * (cfg.endorse_target - q)))
    agent.policy_version += 1
    decision.status = DecisionStatus.Overridden
    decision.action = fb.override
    return fb.override
