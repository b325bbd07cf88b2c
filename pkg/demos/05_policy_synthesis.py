"""
Writing tomorrow's rules from today's incidents
===============================================

High-risk, mitigated decisions drop their event's hashed attributes into a
sliding synthesis window. When the same indicator backs incidents from
enough distinct entities inside that window, a time-limited rule is
synthesized — no operator in the loop. The next event carrying that
indicator short-circuits the whole analysis pipeline: matched, mitigated,
and logged with the rule that did it.

Run it:  python3 demos/05_policy_synthesis.py
"""

from sentinelsim.agents import (
    ContextBucket,
    Decision,
    DecisionStatus,
    MitigationAction,
    RiskBand,
)
from sentinelsim.config import IntelConfig, PolicyConfig
from sentinelsim.events import (
    DetectorView,
    Domain,
    EntityKind,
    EntityRef,
    EventKind,
)
from sentinelsim.policy import RuleStore, SynthesisWindow, match_rules, observe_decision, synthesize

policy_cfg = PolicyConfig()
salt = IntelConfig().salt

window = SynthesisWindow(window_ms=policy_cfg.synthesis_window_ms,
                         min_support=policy_cfg.min_support)
store = RuleStore()

MINUTE = 60_000

# The campaign: one sprayed credential tried against many accounts, each
# attempt routed through a different residential proxy with a different
# browser fingerprint. The only stable indicator is the credential itself.

PROXY_GEO = {"alice": "geo-br", "bob": "geo-vn", "carol": "geo-pl",
             "dave": "geo-ro", "erin": "geo-id"}


def attack_view(entity_id, ts):
    return DetectorView(
        id=f"e-{entity_id}-{ts}",
        ts=ts,
        entity=EntityRef(kind=EntityKind.User, id=entity_id, tenant="acme"),
        domain=Domain.Api,
        kind=EventKind.Login,
        numeric={"request_rate": 55.0, "payload_bytes": 220.0},
        categorical={"geo": PROXY_GEO[entity_id], "hour_of_day": "3",
                     "device_fingerprint": f"fp-{entity_id}",
                     "credential_hash": "cred-sprayed"},
    )


def mitigated_decision(entity_id, ts):
    return Decision(
        id=f"d-{entity_id}-{ts}", ts=ts, event_id=f"e-{entity_id}-{ts}",
        entity=EntityRef(kind=EntityKind.User, id=entity_id, tenant="acme"),
        domain=Domain.Api, event_kind=EventKind.Login, risk=0.82, anomaly=0.82,
        trust_at=0.3, intel_match=0.4,
        bucket=ContextBucket(domain=Domain.Api, band=RiskBand.High, intel_present=True),
        action=MitigationAction.Throttle, rationale=(),
        status=DecisionStatus.Autonomous, latency_ms=220.0, path="agent",
    )


# ----------------------------------------------------------------------------
# Incidents accumulate in the window
# ----------------------------------------------------------------------------
# A credential spray hits three different accounts over a few minutes. Each
# mitigated decision files its hashed attributes; two victims are not
# enough support, three are.

for minute, victim in [(10, "alice"), (12, "bob")]:
    observe_decision(window, mitigated_decision(victim, minute * MINUTE),
                     attack_view(victim, minute * MINUTE), policy_cfg, salt)
print(f"window holds {len(window.entries)} incidents -> "
      f"synthesize finds {len(synthesize(window, store, 13 * MINUTE, policy_cfg))} rules "
      "(two entities is below the support bar)")

observe_decision(window, mitigated_decision("carol", 14 * MINUTE),
                 attack_view("carol", 14 * MINUTE), policy_cfg, salt)
rules = synthesize(window, store, 15 * MINUTE, policy_cfg)
print(f"\nwith a third distinct victim, synthesis emits {len(rules)} rule(s):")
for rule in rules:
    hours = rule.ttl_ms // 3_600_000
    print(f"  {rule.id}: {rule.attribute} hash={rule.value_hash} "
          f"-> {rule.action.value}, origin {rule.origin.value}, ttl {hours}h")
    print(f"       backed by decisions {rule.trigger_decision_ids}")

# Only the indicator shared by all three victims became a rule. The
# per-victim geos and fingerprints sat in the same window but never
# reached three distinct entities, so they were left alone — synthesis
# keys on what the incidents have in common, not on everything they carry.

# ----------------------------------------------------------------------------
# The next carrier short-circuits the pipeline
# ----------------------------------------------------------------------------

dave = attack_view("dave", 16 * MINUTE)
hit = match_rules(store, dave, clock=16 * MINUTE, salt=salt)
print(f"\ndave's first event matches {hit.id} -> {hit.action.value} "
      f"(hit count {hit.hit_count}) with no fresh analysis")

# Re-running synthesis while the rule is active does not duplicate it.
print(f"re-synthesis while active adds {len(synthesize(window, store, 17 * MINUTE, policy_cfg))} rules")

# ----------------------------------------------------------------------------
# Rules expire; coverage must be re-earned
# ----------------------------------------------------------------------------
# Learned rules carry a TTL. After it lapses the rule stops matching, and
# only fresh incidents inside the window can bring an equivalent back.

expiry = rules[0].created_ts + rules[0].ttl_ms + 1
stale = match_rules(store, attack_view("erin", expiry), clock=expiry, salt=salt)
print(f"\nafter the TTL lapses the indicator matches: {stale}")
print(f"unexpired rules at that point: {len(store.unexpired(expiry))} "
      f"(of {len(store.rules)} ever written)")

# The original incidents have long since slid out of the window, so the
# campaign's return has to re-earn its rule from scratch — three fresh
# victims, then a new id with a new clock on it.
for offset, victim in [(0, "erin"), (1, "dave"), (2, "alice")]:
    ts = expiry + offset * MINUTE
    observe_decision(window, mitigated_decision(victim, ts),
                     attack_view(victim, ts), policy_cfg, salt)
reissued = synthesize(window, store, expiry + 3 * MINUTE, policy_cfg)
print(f"three fresh incidents later: {reissued[0].id} re-covers the same "
      f"credential hash ({reissued[0].value_hash == rules[0].value_hash})")
