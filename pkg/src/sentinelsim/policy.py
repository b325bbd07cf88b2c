"""Response and enforcement: rule matching, side-effects, rule synthesis.

Rules run ahead of the agents — an event answered by a rule never reaches
bandit evaluation. The store mixes three origins with fixed precedence
(Operator > Learned > Static). Learned rules are synthesized without any
human input when enough distinct entities generate high-risk decisions
sharing one attribute value inside a sliding window; they carry a finite
TTL so a stale block cannot outlive the campaign that justified it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .agents import (
    ACTION_SEVERITY,
    DOMAIN_ACTIONS,
    Decision,
    MitigationAction,
    _ACTION_ORDER,
)
from .config import IntelConfig, PolicyConfig
from .events import DetectorView, Domain
from .intel import ATTRIBUTE_TYPES, IndicatorType, hash_value

log = logging.getLogger(__name__)


class RuleOrigin(str, Enum):
    Operator = "Operator"
    Learned = "Learned"
    Static = "Static"


_ORIGIN_PRIORITY = {RuleOrigin.Operator: 0, RuleOrigin.Learned: 1, RuleOrigin.Static: 2}


@dataclass
class PolicyRule:
    id: str
    attribute: str
    itype: IndicatorType
    value_hash: int
    action: MitigationAction
    origin: RuleOrigin
    created_ts: int
    ttl_ms: Optional[int]  # None = never expires (Static)
    trigger_decision_ids: tuple[str, ...] = ()
    hit_count: int = 0

    def expired(self, clock: int) -> bool:
        return self.ttl_ms is not None and clock > self.created_ts + self.ttl_ms


@dataclass
class RuleStore:
    rules: list[PolicyRule] = field(default_factory=list)
    _counter: int = 0

    def add(self, rule: PolicyRule) -> None:
        self.rules.append(rule)

    def next_id(self) -> str:
        self._counter += 1
        return f"pr-{self._counter:05d}"

    def unexpired(self, clock: int) -> list[PolicyRule]:
        return [r for r in self.rules if not r.expired(clock)]

    def has_active_rule(self, value_hash: int, clock: int) -> bool:
        return any(r.value_hash == value_hash and not r.expired(clock) for r in self.rules)


def match_rules(store: RuleStore, event: DetectorView, clock: int, salt: str) -> Optional[PolicyRule]:
    """First unexpired rule matching any indicator-eligible attribute,
    ordered by origin precedence then age. Bumps the hit counter."""
    candidates = []
    for attr, itype in ATTRIBUTE_TYPES:
        value = event.categorical.get(attr)
        if value is None:
            continue
        h = hash_value(value, salt)
        for rule in store.rules:
            if rule.itype is itype and rule.value_hash == h and not rule.expired(clock):
                candidates.append(rule)
    if not candidates:
        return None
    best = min(candidates, key=lambda r: (_ORIGIN_PRIORITY[r.origin], r.created_ts, r.id))
    best.hit_count += 1
    return best


# ----------------------------------------------------------------------------
# Synthesis
# ----------------------------------------------------------------------------

@dataclass
class _WindowEntry:
    ts: int
    decision_id: str
    entity_key: str
    domain: Domain
    attribute_hashes: tuple[tuple[str, IndicatorType, int], ...]


@dataclass
class SynthesisWindow:
    window_ms: int
    min_support: int
    entries: list[_WindowEntry] = field(default_factory=list)

    def evict(self, clock: int) -> None:
        cutoff = clock - self.window_ms
        while self.entries and self.entries[0].ts < cutoff:
            self.entries.pop(0)


def observe_decision(
    window: SynthesisWindow,
    decision: Decision,
    event: DetectorView,
    cfg: PolicyConfig,
    salt: str,
) -> None:
    """Feed one decision to the synthesis window if it clears the bar."""
    window.evict(decision.ts)
    if decision.risk < cfg.observe_min_risk:
        return
    if ACTION_SEVERITY[decision.action] < cfg.observe_min_severity:
        return
    hashes = tuple(
        (attr, itype, hash_value(event.categorical[attr], salt))
        for attr, itype in ATTRIBUTE_TYPES
        if attr in event.categorical
    )
    window.entries.append(
        _WindowEntry(
            ts=decision.ts,
            decision_id=decision.id,
            entity_key=decision.entity.key(),
            domain=decision.domain,
            attribute_hashes=hashes,
        )
    )


def _synthesized_action(domains: set[Domain]) -> MitigationAction:
    shared = None
    for domain in domains:
        actions = {a for a in DOMAIN_ACTIONS[domain] if ACTION_SEVERITY[a] >= 0.5}
        shared = actions if shared is None else shared & actions
    if shared:
        return min(shared, key=lambda a: (ACTION_SEVERITY[a], _ACTION_ORDER[a]))
    if domains == {Domain.Endpoint}:
        return MitigationAction.StepUpAuth
    return MitigationAction.Throttle


def synthesize(window: SynthesisWindow, store: RuleStore, clock: int, cfg: PolicyConfig) -> list[PolicyRule]:
    """Cluster windowed high-risk decisions by shared attribute value and
    emit one Learned rule per value backed by >= min_support distinct
    entities. Creation is logged with the triggering decision ids."""
    window.evict(clock)
    by_value: dict[tuple[str, IndicatorType, int], dict[str, object]] = {}
    for entry in window.entries:
        for attr, itype, h in entry.attribute_hashes:
            g = by_value.setdefault(
                (attr, itype, h),
                {"entities": set(), "decisions": [], "domains": set()},
            )
            g["entities"].add(entry.entity_key)
            g["decisions"].append(entry.decision_id)
            g["domains"].add(entry.domain)

    created: list[PolicyRule] = []
    for (attr, itype, h), group in sorted(by_value.items(), key=lambda kv: (kv[0][0], kv[0][2])):
        if len(group["entities"]) < window.min_support:
            continue
        if store.has_active_rule(h, clock):
            continue
        rule = PolicyRule(
            id=store.next_id(),
            attribute=attr,
            itype=itype,
            value_hash=h,
            action=_synthesized_action(group["domains"]),
            origin=RuleOrigin.Learned,
            created_ts=clock,
            ttl_ms=cfg.learned_ttl_ms,
            trigger_decision_ids=tuple(dict.fromkeys(group["decisions"])),
        )
        store.add(rule)
        created.append(rule)
        log.debug("synthesized rule %s on %s (support %d)", rule.id, attr, len(group["entities"]))
    return created


# ----------------------------------------------------------------------------
# Enforcement
# ----------------------------------------------------------------------------

@dataclass
class EnforcementState:
    revoked_credentials: dict[int, int] = field(default_factory=dict)  # cred hash -> until_ts
    paused_sessions: dict[str, int] = field(default_factory=dict)   # entity key -> until_ts
    quarantined: set[str] = field(default_factory=set)
    throttled: dict[str, int] = field(default_factory=dict)         # entity key -> until_ts

    def is_paused(self, entity_key: str, clock: int) -> bool:
        until = self.paused_sessions.get(entity_key)
        return until is not None and clock < until

    def is_throttled(self, entity_key: str, clock: int) -> bool:
        until = self.throttled.get(entity_key)
        return until is not None and clock < until

    def is_revoked(self, event: DetectorView, salt: str, clock: int) -> bool:
        cred = event.categorical.get("credential_hash")
        if cred is None:
            return False
        until = self.revoked_credentials.get(hash_value(cred, salt))
        return until is not None and clock < until


def enforce(
    action: MitigationAction,
    event: DetectorView,
    state: EnforcementState,
    clock: int,
    cfg: PolicyConfig,
    intel_cfg: IntelConfig,
    risk: float,
    credential_suspicious: bool = True,
) -> bool:
    """Apply the action's side-effects. Returns True when the action is
    severe enough (>= 0.5) that the entity's trust must take an incident
    penalty — the caller owns the trust store.

    Credential revocation only persists when the triggering decision
    carried high fused risk (an exploratory revoke on routine traffic
    stays a one-off) *and* the credential itself looked anomalous — a
    token is revoked because it appears stolen, not because its owner is
    being noisy; revoking a compromised-but-familiar service credential
    would lock the victim out alongside the attacker. It expires after
    the rotation window — the credential's owner is assumed to re-issue
    it, which is also why a recurring campaign must present a fresh
    token.
    """
    key = event.entity.key()
    if action is MitigationAction.RevokeToken:
        cred = event.categorical.get("credential_hash")
        if cred is not None and credential_suspicious and risk >= cfg.revoke_min_risk:
            state.revoked_credentials[hash_value(cred, intel_cfg.salt)] = (
                clock + cfg.revocation_duration_ms
            )
    elif action is MitigationAction.PauseSession:
        state.paused_sessions[key] = clock + cfg.pause_duration_ms
    elif action is MitigationAction.QuarantineContainer:
        state.quarantined.add(key)
    elif action is MitigationAction.Throttle:
        state.throttled[key] = clock + cfg.throttle_duration_ms
    # Allow / Alert / StepUpAuth / BlockIndicator leave no enforcement state.
    return ACTION_SEVERITY[action] >= 0.5


# ----------------------------------------------------------------------------
# Adaptability
# ----------------------------------------------------------------------------

def adaptability_score(
    recurrence_event_ids: list[tuple[int, list[str]]],
    decisions_by_event: dict[str, Decision],
    rules_by_id: dict[str, PolicyRule],
) -> Optional[float]:
    """Fraction of recurrence events handled by a Learned rule synthesized
    before its recurrence window opened, at mitigation strength.

    `recurrence_event_ids` maps each recurrence window start to the
    malicious event ids inside that window. Systems that never synthesize
    rules score 0; scenarios without recurrences score not-applicable.
    """
    total = 0
    covered = 0
    for window_start, event_ids in recurrence_event_ids:
        for event_id in event_ids:
            total += 1
            decision = decisions_by_event.get(event_id)
            if decision is None or decision.rule_id is None:
                continue
            rule = rules_by_id.get(decision.rule_id)
            if rule is None or rule.origin is not RuleOrigin.Learned:
                continue
            if rule.created_ts >= window_start:
                continue
            if ACTION_SEVERITY[decision.action] >= 0.5:
                covered += 1
    if total == 0:
        return None
    return covered / total
