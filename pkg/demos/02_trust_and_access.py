"""
Trust as a moving target: drift, penalties, and earned recovery
===============================================================

Every entity carries a continuous trust score. Calm behavior nudges it up,
anomalies and shared-intelligence matches pull it down, and an executed
mitigation lands a hard penalty that takes real time to climb back from.
Access checks then compare trust against a baseline that scales with
resource sensitivity and the current federation threat level — there are
no permanent allowlists to hide behind.

Run it:  python3 demos/02_trust_and_access.py
"""

from sentinelsim.config import TrustConfig
from sentinelsim.events import Domain, EntityKind, EntityRef
from sentinelsim.trust import (
    AccessContext,
    Sensitivity,
    apply_incident_penalty,
    evaluate_access,
    initial_trust_state,
    update_trust,
)

cfg = TrustConfig()
entity = EntityRef(kind=EntityKind.User, id="analyst-7", tenant="acme")

# ----------------------------------------------------------------------------
# Drift: trust follows the evidence
# ----------------------------------------------------------------------------
# Each update moves trust a step toward (1 - anomaly) * (1 - w * intel).
# Calm traffic drifts toward 1.0; a streak of anomalies drags it down
# without any single event being decisive.

state = initial_trust_state(entity, cfg)
print(f"starting trust: {state.trust:.3f}")

for step in range(1, 41):
    state = update_trust(state, anomaly=0.05, intel_match=0.0, cfg=cfg)
    if step % 10 == 0:
        print(f"  after {step:>2} calm events:      trust {state.trust:.3f}")

for step in range(1, 11):
    state = update_trust(state, anomaly=0.9, intel_match=0.4, cfg=cfg)
print(f"  after 10 anomalous events: trust {state.trust:.3f}")

# ----------------------------------------------------------------------------
# Penalty: mitigations leave a mark
# ----------------------------------------------------------------------------
# When a severity >= 0.5 action actually executes, trust takes a
# multiplicative hit and the incident counter increments.

state = apply_incident_penalty(state, action_severity=0.9, cfg=cfg)
print(f"\nafter a severity-0.9 mitigation: trust {state.trust:.3f} "
      f"(incidents: {state.incident_count})")

# ----------------------------------------------------------------------------
# Access checks: the bar moves with context
# ----------------------------------------------------------------------------
# The grant baseline rises with resource sensitivity and with the live
# threat level published by the federation — the same trust score that
# opens a dashboard is refused a config change, and during an active
# campaign even routine calls from this battered entity get turned away.


def access_table(state):
    print(f"{'resource':<10} {'quiet day':>22} {'active campaign (0.8)':>24}")
    for sensitivity in (Sensitivity.Low, Sensitivity.Medium, Sensitivity.High):
        row = [f"{sensitivity.value:<10}"]
        for threat in (0.0, 0.8):
            ctx = AccessContext(resource_sensitivity=sensitivity,
                                domain=Domain.Api, active_threat_level=threat)
            outcome = evaluate_access(state, ctx, cfg)
            verdict = "grant" if outcome.granted else "deny "
            cell = f"{verdict} (margin {outcome.margin:+.2f})"
            row.append(cell.rjust(22 if threat == 0.0 else 24))
        print("".join(row))


print(f"\naccess checks at trust {state.trust:.3f}, right after the incident:")
access_table(state)

# ----------------------------------------------------------------------------
# Recovery: geometric, predictable, slow
# ----------------------------------------------------------------------------
# Under perfectly calm behavior trust follows the closed form
# 1 - (1 - t0) * (1 - lr)^k, so "how many clean events until access comes
# back" is a number you can compute, not a vibe.

t0 = state.trust
print("\nrecovery under calm behavior (closed form in parentheses):")
for step in range(1, 101):
    state = update_trust(state, anomaly=0.0, intel_match=0.0, cfg=cfg)
    if step in (10, 30, 60, 100):
        closed = 1.0 - (1.0 - t0) * (1.0 - cfg.learning_rate) ** step
        print(f"  after {step:>3} clean events: trust {state.trust:.3f} ({closed:.3f})")

print(f"\naccess checks at trust {state.trust:.3f}, after the climb back:")
access_table(state)
