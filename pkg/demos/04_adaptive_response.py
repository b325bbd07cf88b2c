"""
Choosing mitigations that earn their keep
=========================================

Response is picked per context bucket (domain x risk band x intel flag) by
an epsilon-greedy policy over learned action values. Day zero is not random:
initial preferences are the expected payoff of each action given how likely
that band is to be hostile, so the first decision is already sensible.
After that, outcome disclosures and analyst feedback move the numbers —
and eventually the behavior.

Run it:  python3 demos/04_adaptive_response.py
"""

import numpy as np

from sentinelsim.agents import (
    ACTION_SEVERITY,
    AgentState,
    ContextBucket,
    Decision,
    DecisionStatus,
    FeedbackRecord,
    MitigationAction,
    RiskBand,
    apply_feedback,
    learn,
    reward_for,
    select_action,
)
from sentinelsim.config import AgentConfig, RewardConfig
from sentinelsim.events import Domain, EntityKind, EntityRef, EventKind, GroundTruth

agent_cfg = AgentConfig()
reward_cfg = RewardConfig()
rng = np.random.default_rng(4)

# ----------------------------------------------------------------------------
# Day zero: expected payoff, not a coin flip
# ----------------------------------------------------------------------------

agent = AgentState(tenant="acme", domain=Domain.Api, epsilon=0.0)

print("initial action preferences for the Api domain (no intel):")
for band in (RiskBand.Low, RiskBand.Medium, RiskBand.High):
    bucket = ContextBucket(domain=Domain.Api, band=band, intel_present=False)
    table = agent.q_for(bucket)
    ranked = sorted(table.items(), key=lambda kv: -kv[1])
    cells = "  ".join(f"{a.value}={q:+.2f}" for a, q in ranked)
    pick = select_action(agent, bucket, rng)
    print(f"  {band.value:<7} -> {pick.value:<9}  [{cells}]")

# ----------------------------------------------------------------------------
# Outcome disclosures price the tradeoffs
# ----------------------------------------------------------------------------
# Containing an attack with enough severity pays +1; under-responding to it
# costs -1; waving a benign event through earns +0.2; and a false-positive
# mitigation costs -2 scaled by how disruptive the action was.

attack = GroundTruth(malicious=True, required_severity=0.5)
benign = GroundTruth(malicious=False)
print("\ndisclosed rewards:")
for label, truth, action in [
    ("throttle an actual attack   ", attack, MitigationAction.Throttle),
    ("merely alert on that attack ", attack, MitigationAction.Alert),
    ("allow a benign event        ", benign, MitigationAction.Allow),
    ("throttle a benign event     ", benign, MitigationAction.Throttle),
]:
    print(f"  {label} -> {reward_for(truth, action, reward_cfg):+.2f}")

# ----------------------------------------------------------------------------
# Sustained evidence changes the behavior
# ----------------------------------------------------------------------------
# Suppose some medium-band context keeps tripping the detector but every
# disclosure comes back benign. Each round, the mitigation the agent tried
# gets billed at -2 x severity while a plain Allow would have earned +0.2.
# The agent works down through its preferences until it stops disrupting
# that context altogether.

bucket = ContextBucket(domain=Domain.Api, band=RiskBand.Medium, intel_present=False)
entity = EntityRef(kind=EntityKind.Service, id="ci-runner", tenant="acme")


def decision_for(n, action):
    return Decision(
        id=f"d-{n}", ts=n, event_id=f"e-{n}", entity=entity, domain=Domain.Api,
        event_kind=EventKind.ApiCall, risk=0.55, anomaly=0.55, trust_at=0.8,
        intel_match=0.0, bucket=bucket, action=action,
        rationale=(), status=DecisionStatus.Autonomous, latency_ms=220.0,
        path="agent",
    )


print("\nmedium-band context that keeps coming back benign:")
for step in range(1, 41):
    pick = select_action(agent, bucket, rng)
    outcome = reward_for(benign, pick, reward_cfg)
    learn(agent, decision_for(step, pick), outcome, agent_cfg)
    if step <= 6 or pick is MitigationAction.Allow:
        table = agent.q_for(bucket)
        top = sorted(table.items(), key=lambda kv: -kv[1])[:2]
        lead = "  ".join(f"q[{a.value}]={q:+.2f}" for a, q in top)
        print(f"  step {step:>2}: tried {pick.value:<12} reward {outcome:+.2f}   {lead}")
    if pick is MitigationAction.Allow:
        print(f"  after {step} disclosures the agent simply allows this context")
        break

# ----------------------------------------------------------------------------
# Analyst overrides teach twice
# ----------------------------------------------------------------------------
# Feedback with an override punishes the original pick toward the analyst's
# score and endorses the replacement toward a moderate anchor, so one
# reviewed incident moves two action values at once.

fresh = AgentState(tenant="acme", domain=Domain.Api, epsilon=0.0)
reviewed = Decision(
    id="d-rev", ts=99, event_id="e-rev", entity=entity, domain=Domain.Api,
    event_kind=EventKind.ApiCall, risk=0.55, anomaly=0.55, trust_at=0.6,
    intel_match=0.0, bucket=bucket, action=MitigationAction.Allow,
    rationale=(), status=DecisionStatus.Autonomous, latency_ms=220.0,
    path="agent",
)
table = fresh.q_for(bucket)
before_allow = table[MitigationAction.Allow]
before_throttle = table[MitigationAction.Throttle]
feedback = FeedbackRecord(decision_id="d-rev", score=-1.0,
                          override=MitigationAction.Throttle, ts=100)
applied = apply_feedback(fresh, feedback, reviewed, agent_cfg)

print(f"\nanalyst override on a waved-through event (Allow -> {applied.value}):")
print(f"  q[Allow]    {before_allow:+.3f} -> {table[MitigationAction.Allow]:+.3f} (punished)")
print(f"  q[Throttle] {before_throttle:+.3f} -> {table[MitigationAction.Throttle]:+.3f} (endorsed)")
print(f"  decision now: action={reviewed.action.value}, status={reviewed.status.value}")
print(f"  severity on file: {ACTION_SEVERITY[reviewed.action]}")
print(f"  policy version after one review: {fresh.policy_version}")
