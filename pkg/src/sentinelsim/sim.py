"""Event-driven simulation core and the metrics harness.

A run takes (scenario, model, seed) and replays the identical merged event
stream through one of three pipelines:

  static   — fixed thresholds, blocklist, signatures; every decision pays
             the rule-distribution latency.
  ml       — centralized batch classifier trained on the first slice of
             the run, frozen afterwards; alerts only.
  agentic  — per-(tenant, domain) learning agents with profiling, trust,
             federated intel, rule synthesis, and enforcement.

All time is virtual milliseconds on a heap-driven clock; wall time is
measured only to report the processing-cost analog, never to drive logic.
Determinism: generation randomness is keyed by (scenario seed, run seed),
runtime randomness additionally by the model name, so reruns are
bit-identical and all models see the same traffic.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import agents as agents_mod
from . import baselines as baselines_mod
from . import intel as intel_mod
from . import policy as policy_mod
from . import profiling as profiling_mod
from . import trust as trust_mod
from .agents import (
    ACTION_SEVERITY,
    AgentState,
    ContextBucket,
    Decision,
    DecisionStatus,
    FeedbackRecord,
    MitigationAction,
    RiskBand,
    risk_band,
)
from .config import EngineConfig
from .events import (
    FAMILY_REQUIRED_SEVERITY,
    Domain,
    EntityRef,
    GroundTruth,
    ScenarioSpec,
    TelemetryEvent,
    canonical_json,
    export_ndjson,
    generate_stream,
)
from .trust import KIND_SENSITIVITY, AccessContext

MODELS = ("static", "ml", "agentic")


class StopSimulation(Exception):
    """Raised by a pacer callback to end the run at an event boundary."""


# ============================================================================
# Latency model
# ============================================================================

class LatencySampler:
    """Per-decision virtual latency: sum of the path's hop costs, each hop
    jittered multiplicatively. Zero jitter makes composition exact."""

    def __init__(self, cfg, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng

    def _sample(self, hops: tuple[float, ...]) -> float:
        j = self.cfg.jitter
        if j <= 0.0:
            return float(sum(hops))
        return float(sum(h * self.rng.uniform(1.0 - j, 1.0 + j) for h in hops))

    def agent(self) -> float:
        return self._sample(self.cfg.agent_hops())

    def classifier(self) -> float:
        return self._sample(self.cfg.ml_hops())

    def static(self) -> float:
        return self._sample(self.cfg.static_hops())

    def short_circuit(self) -> float:
        return self._sample(self.cfg.short_circuit_hops())


# ============================================================================
# Run log
# ============================================================================

@dataclass
class InjectionSummary:
    attack_id: str
    family: str
    start_ms: int
    end_ms: int
    recurrence_start_ms: Optional[int]
    recurrence_end_ms: Optional[int]
    required_severity: float


@dataclass
class RunLog:
    scenario_name: str
    scenario_digest: str
    model: str
    seed: int
    events: list[TelemetryEvent]
    decisions: list[Decision]
    policy_timeline: list[dict]
    learning_log: list[dict]
    trust_snapshot: dict
    profile_snapshot: dict
    injections: list[InjectionSummary]
    rules_by_id: dict[str, policy_mod.PolicyRule]
    wall_seconds: float = 0.0
    security_seconds: float = 0.0

    def decisions_by_event(self) -> dict[str, Decision]:
        return {d.event_id: d for d in self.decisions}


def _decision_to_dict(d: Decision) -> dict:
    return {
        "id": d.id,
        "ts": d.ts,
        "event_id": d.event_id,
        "entity": {"kind": d.entity.kind.value, "id": d.entity.id, "tenant": d.entity.tenant},
        "domain": d.domain.value,
        "event_kind": d.event_kind.value,
        "risk": d.risk,
        "anomaly": d.anomaly,
        "trust_at": d.trust_at,
        "intel_match": d.intel_match,
        "bucket": d.bucket.key(),
        "action": d.action.value,
        "severity": ACTION_SEVERITY[d.action],
        "status": d.status.value,
        "latency_ms": d.latency_ms,
        "path": d.path,
        "rule_id": d.rule_id,
        "rationale": [{"name": f.name, "score": f.score, "detail": f.detail} for f in d.rationale],
    }


# ============================================================================
# Metrics
# ============================================================================

def detection_label(decision: Decision, threshold: float = 0.2) -> bool:
    """Detected = the system applied Alert-or-stronger to the event."""
    return ACTION_SEVERITY[decision.action] >= threshold


def confusion(run: RunLog, threshold: float = 0.2) -> dict[str, int]:
    by_event = run.decisions_by_event()
    if len(run.decisions) != len(run.events) or any(e.id not in by_event for e in run.events):
        raise ValueError("run log does not cover the event stream 1:1")
    tp = fp = tn = fn = 0
    for event in run.events:
        detected = detection_label(by_event[event.id], threshold)
        if event.truth.malicious:
            tp += detected
            fn += not detected
        else:
            fp += detected
            tn += not detected
    return {"tp": tp, "fp": fp, "tn": tn, "fn": fn}


def prf(matrix: dict[str, int]) -> dict[str, Optional[float]]:
    tp, fp, fn = matrix["tp"], matrix["fp"], matrix["fn"]
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = 0.0 if (recall is not None or precision is not None) else None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    if recall is None:
        f1 = None
    return {"precision": precision, "recall": recall, "f1": f1}


def per_family_recall(run: RunLog, threshold: float = 0.2) -> dict[str, Optional[float]]:
    by_event = run.decisions_by_event()
    totals: dict[str, int] = {}
    hits: dict[str, int] = {}
    for event in run.events:
        if not event.truth.malicious:
            continue
        family = event.truth.attack_family.value
        totals[family] = totals.get(family, 0) + 1
        if detection_label(by_event[event.id], threshold):
            hits[family] = hits.get(family, 0) + 1
    return {fam: hits.get(fam, 0) / n for fam, n in sorted(totals.items())}


def latency_stats(run: RunLog) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    groups: dict[str, list[float]] = {"overall": []}
    for d in run.decisions:
        groups["overall"].append(d.latency_ms)
        groups.setdefault(d.path, []).append(d.latency_ms)
    for name, values in groups.items():
        if not values:
            continue
        arr = np.asarray(values)
        out[name] = {
            "mean": float(arr.mean()),
            "median": float(np.median(arr)),
            "p95": float(np.percentile(arr, 95)),
            "count": len(values),
        }
    return out


def adaptability(run: RunLog) -> Optional[float]:
    recurrences: list[tuple[int, list[str]]] = []
    for inj in run.injections:
        if inj.recurrence_start_ms is None:
            continue
        ids = [
            e.id
            for e in run.events
            if e.truth.malicious
            and e.truth.attack_id == inj.attack_id
            and inj.recurrence_start_ms <= e.ts < inj.recurrence_end_ms
        ]
        recurrences.append((inj.recurrence_start_ms, ids))
    if not recurrences:
        return None
    return policy_mod.adaptability_score(recurrences, run.decisions_by_event(), run.rules_by_id)


def run_report(run: RunLog, cfg: EngineConfig) -> dict:
    matrix = confusion(run, cfg.detection_min_severity)
    metrics = prf(matrix)
    ad = adaptability(run)
    return {
        "scenario": run.scenario_name,
        "scenario_digest": run.scenario_digest,
        "model": run.model,
        "seed": run.seed,
        "events": len(run.events),
        "malicious_events": sum(1 for e in run.events if e.truth.malicious),
        "confusion": matrix,
        "precision": metrics["precision"],
        "recall": metrics["recall"],
        "f1": metrics["f1"],
        "per_family_recall": per_family_recall(run, cfg.detection_min_severity),
        "latency": latency_stats(run),
        "adaptability": ad,
        "learned_rules": sum(1 for r in run.rules_by_id.values() if r.origin is policy_mod.RuleOrigin.Learned),
    }


# ============================================================================
# Engines
# ============================================================================

class _Scheduler:
    """Min-heap of (ts, priority, seq) — priorities keep maintenance ahead
    of disclosures ahead of telemetry at equal timestamps."""

    def __init__(self):
        self._heap: list[tuple[int, int, int, str, Any]] = []
        self._seq = 0
        self.now = 0

    def push(self, ts: int, priority: int, kind: str, payload: Any) -> None:
        if ts < self.now:
            raise RuntimeError(f"attempt to schedule into the past: {ts} < {self.now}")
        self._seq += 1
        heapq.heappush(self._heap, (ts, priority, self._seq, kind, payload))

    def pop(self) -> Optional[tuple[int, str, Any]]:
        if not self._heap:
            return None
        ts, _prio, _seq, kind, payload = heapq.heappop(self._heap)
        if ts < self.now:
            raise RuntimeError("virtual clock moved backwards")
        self.now = ts
        return ts, kind, payload


class AgenticEngine:
    """The full pipeline: enforcement short-circuits, rule matching, then
    profile/trust/intel fusion and bandit action selection."""

    def __init__(self, spec: ScenarioSpec, cfg: EngineConfig, runtime_rng: np.random.Generator,
                 jitter_rng: np.random.Generator, reviewer_attached: bool = False):
        self.spec = spec
        self.cfg = cfg
        self.rng = runtime_rng
        self.latency = LatencySampler(cfg.latency, jitter_rng)
        self.reviewer_attached = reviewer_attached

        self.profiles: dict[str, profiling_mod.BehaviorProfile] = {}
        self.peers: dict[str, profiling_mod.BehaviorProfile] = {}
        self.trust: dict[str, trust_mod.TrustState] = {}
        self.local_kb: dict[str, intel_mod.LocalKnowledgeBase] = {}
        self.global_kb = intel_mod.GlobalKnowledgeBase(promotion_k=cfg.intel.promotion_k)
        self.agents: dict[tuple[str, Domain], AgentState] = {}
        self.rules = policy_mod.RuleStore()
        self.window = policy_mod.SynthesisWindow(
            window_ms=cfg.policy.synthesis_window_ms, min_support=cfg.policy.min_support
        )
        self.enforcement = policy_mod.EnforcementState()
        self.threat_level = 0.0
        self.policy_timeline: list[dict] = []
        self.learning_log: list[dict] = []
        self.pending: dict[str, Decision] = {}
        self._decision_seq = 0
        self._events_by_decision: dict[str, TelemetryEvent] = {}
        self._suspicious_by_decision: dict[str, frozenset[str]] = {}

        for tenant in spec.tenants:
            self.local_kb[tenant.id] = intel_mod.LocalKnowledgeBase(tenant=tenant.id)
            self.peers[tenant.id] = profiling_mod.BehaviorProfile(
                entity=EntityRef(kind=list(tenant.entities)[0].kind, id="__aggregate__", tenant=tenant.id)
            )
            for domain in Domain:
                self.agents[(tenant.id, domain)] = AgentState(
                    tenant=tenant.id, domain=domain, epsilon=cfg.agent.epsilon_start,
                )

    # -- helpers ----------------------------------------------------------

    def _next_decision_id(self) -> str:
        self._decision_seq += 1
        return f"d-{self._decision_seq:08d}"

    def _trust_state(self, entity: EntityRef) -> trust_mod.TrustState:
        key = entity.key()
        state = self.trust.get(key)
        if state is None:
            state = trust_mod.initial_trust_state(entity, self.cfg.trust)
            self.trust[key] = state
        return state

    def _profile(self, entity: EntityRef) -> profiling_mod.BehaviorProfile:
        key = entity.key()
        prof = self.profiles.get(key)
        if prof is None:
            prof = self.profiles[key] = profiling_mod.BehaviorProfile(entity=entity)
        return prof

    # -- event handling ---------------------------------------------------

    def handle_event(self, event: TelemetryEvent, schedule: Callable[[int, str, Any], None],
                     listener: Optional[Any]) -> Decision:
        view = event.view()
        entity_key = event.entity.key()
        salt = self.cfg.intel.salt

        if event.ts < self.cfg.profiling.warmup_ms:
            # Baseline establishment: every entity's profile must absorb
            # normal traffic before its anomaly scores mean anything, so the
            # pipeline observes without acting and without moving trust.
            return self._warmup_observe(event)

        if self.enforcement.is_revoked(view, salt, event.ts):
            decision = self._short_circuit(
                event, action=MitigationAction.RevokeToken, path="enforcement", rule_id=None,
                note="credential previously revoked",
            )
        else:
            rule = policy_mod.match_rules(self.rules, view, event.ts, salt)
            if rule is not None:
                decision = self._short_circuit(
                    event, action=rule.action, path="rule", rule_id=rule.id,
                    note=f"{rule.origin.value} rule on {rule.attribute}",
                )
            else:
                decision = self._agent_path(event, schedule)

        if decision.status is not DecisionStatus.PendingReview:
            self._apply_effects(decision, event, listener)
        else:
            self.pending[decision.id] = decision
            self._events_by_decision[decision.id] = event
            schedule(event.ts + self.cfg.agent.review_timeout_ms, "review_timeout", decision.id)
        return decision

    def _short_circuit(self, event: TelemetryEvent, action: MitigationAction, path: str,
                       rule_id: Optional[str], note: str) -> Decision:
        trust_at = self._trust_state(event.entity).trust
        risk = agents_mod.fuse_risk(1.0, trust_at, 1.0, self.cfg.fusion)
        bucket = ContextBucket(domain=event.domain, band=risk_band(risk), intel_present=True)
        return Decision(
            id=self._next_decision_id(),
            ts=event.ts,
            event_id=event.id,
            entity=event.entity,
            domain=event.domain,
            event_kind=event.kind,
            risk=risk,
            anomaly=1.0,
            trust_at=trust_at,
            intel_match=1.0,
            bucket=bucket,
            action=action,
            rationale=(agents_mod.RationaleFactor(name="short_circuit", score=1.0, detail=note),),
            status=DecisionStatus.Autonomous,
            latency_ms=self.latency.short_circuit(),
            path=path,
            rule_id=rule_id,
        )

    def _warmup_observe(self, event: TelemetryEvent) -> Decision:
        """Absorb the event into the baselines and wave it through.

        During the establishment window the scores are recorded for the log
        but carry no consequences: no mitigation, no trust movement, no
        intel, no synthesis, no bandit draw.
        """
        view = event.view()
        profile = self._profile(event.entity)
        peer = self.peers[event.entity.tenant]
        assessment = profiling_mod.assess(profile, peer, view, self.cfg.profiling)
        state = self._trust_state(event.entity)
        risk = agents_mod.fuse_risk(assessment.score, state.trust, 0.0, self.cfg.fusion)
        profiling_mod.update_profile(profile, view, self.cfg.profiling)
        profiling_mod.update_peer_profile(peer, view, self.cfg.profiling)
        bucket = ContextBucket(domain=event.domain, band=risk_band(risk), intel_present=False)
        return Decision(
            id=self._next_decision_id(),
            ts=event.ts,
            event_id=event.id,
            entity=event.entity,
            domain=event.domain,
            event_kind=event.kind,
            risk=risk,
            anomaly=assessment.score,
            trust_at=state.trust,
            intel_match=0.0,
            bucket=bucket,
            action=MitigationAction.Allow,
            rationale=(
                agents_mod.RationaleFactor(
                    name="baseline_warmup", score=assessment.score,
                    detail="observe-only while behavior baselines are established",
                ),
            ),
            status=DecisionStatus.Autonomous,
            latency_ms=self.latency.agent(),
            path="agent",
            rule_id=None,
        )

    def _agent_path(self, event: TelemetryEvent, schedule: Callable[[int, str, Any], None]) -> Decision:
        view = event.view()
        profile = self._profile(event.entity)
        peer = self.peers[event.entity.tenant]
        assessment = profiling_mod.assess(profile, peer, view, self.cfg.profiling)
        intel_match = intel_mod.match(self.local_kb[event.entity.tenant], self.global_kb, view, self.cfg.intel)
        state = self._trust_state(event.entity)
        ctx = AccessContext(
            resource_sensitivity=KIND_SENSITIVITY[event.kind],
            domain=event.domain,
            active_threat_level=self.threat_level,
        )
        access = trust_mod.evaluate_access(state, ctx, self.cfg.trust)

        agent = self.agents[(event.entity.tenant, event.domain)]
        agent.epsilon = agents_mod.epsilon_at(event.ts / self.spec.duration_ms, self.cfg.agent)
        decision = agents_mod.decide(
            agent=agent,
            decision_id=self._next_decision_id(),
            event_id=event.id,
            ts=event.ts,
            entity=event.entity,
            event_kind=event.kind,
            anomaly=assessment.score,
            anomaly_factors=assessment.factors,
            trust_at=state.trust,
            intel_match=intel_match,
            access_granted=access.granted,
            access_margin=access.margin,
            latency_ms=self.latency.agent(),
            rng=self.rng,
            fusion=self.cfg.fusion,
            agent_cfg=self.cfg.agent,
            reviewer_attached=self.reviewer_attached,
        )

        # The event is absorbed into the baselines after being judged — but
        # only when its fused risk stayed in the Low band. Anything the
        # assessment itself flagged must not retrain the profile, or a
        # sustained campaign would blend itself into the baseline and look
        # normal before containment completes (numeric baselines chase a
        # volumetric attack within a dozen absorbed events).
        if decision.bucket.band is RiskBand.Low:
            profiling_mod.update_profile(profile, view, self.cfg.profiling)
            profiling_mod.update_peer_profile(peer, view, self.cfg.profiling)
        schedule(event.ts + self.cfg.agent.disclosure_delay_ms, "disclosure", (decision.id, event.id))
        self._events_by_decision[decision.id] = event
        self._suspicious_by_decision[decision.id] = frozenset(
            f.feature.split(":", 1)[1]
            for f in assessment.factors
            if f.feature.startswith("categorical:") and f.score >= self.cfg.intel.suspicious_min_score
        )
        return decision

    def _apply_effects(self, decision: Decision, event: TelemetryEvent, listener: Optional[Any]) -> None:
        """Action-dependent side-effects: enforcement, trust, intel, synthesis."""
        view = event.view()
        suspicious = self._suspicious_by_decision.pop(decision.id, None)
        # A decision produced by the enforcement state itself (an already
        # revoked credential knocking again) is not re-enforced: repeat
        # denials must not extend the revocation window.
        if decision.path != "enforcement":
            penalty_due = policy_mod.enforce(
                decision.action, view, self.enforcement, decision.ts, self.cfg.policy,
                self.cfg.intel, decision.risk,
                credential_suspicious=(
                    True if suspicious is None else "credential_hash" in suspicious
                ),
            )
        else:
            penalty_due = False
        state = self._trust_state(event.entity)
        # Short-circuited repeats of an already-contained campaign do not
        # re-penalize, and neither does an escalation forced onto low-risk
        # traffic by a depressed trust score — otherwise an entity could
        # never climb back above its access baseline.
        if (
            penalty_due
            and decision.path == "agent"
            and decision.risk >= self.cfg.trust.penalty_min_risk
        ):
            state = trust_mod.apply_incident_penalty(state, ACTION_SEVERITY[decision.action], self.cfg.trust)
            self.trust[event.entity.key()] = state
            if listener is not None:
                listener.on_trust(event.entity.key(), state.trust, decision.ts)
        if decision.path == "agent":
            state = trust_mod.update_trust(
                state, decision.anomaly, decision.intel_match, self.cfg.trust, ts=decision.ts
            )
            self.trust[event.entity.key()] = state
            # Only fresh assessments count as evidence. A rule or revocation
            # firing again is the system hearing its own echo; letting those
            # synthetic-risk decisions seed indicators or rule synthesis
            # turns one false positive into a self-confirming lockdown.
            intel_mod.record_local(
                self.local_kb[event.entity.tenant], view, decision.risk,
                ACTION_SEVERITY[decision.action], decision.ts, self.cfg.intel,
                suspicious_attrs=suspicious,
            )
            policy_mod.observe_decision(self.window, decision, view, self.cfg.policy, self.cfg.intel.salt)

    # -- timers -----------------------------------------------------------

    def on_disclosure(self, decision: Decision, truth: GroundTruth) -> None:
        if decision.feedback_applied or decision.path != "agent":
            return
        if decision.id in self.pending:
            return  # unresolved review: learning waits for the outcome
        reward = agents_mod.reward_for(truth, decision.action, self.cfg.reward)
        self._learn(decision, reward, source="truth")

    def _learn(self, decision: Decision, reward: float, source: str) -> None:
        agent = self.agents[(decision.entity.tenant, decision.domain)]
        agents_mod.learn(agent, decision, reward, self.cfg.agent)
        self.learning_log.append(
            {
                "ts": decision.ts,
                "decision_id": decision.id,
                "tenant": decision.entity.tenant,
                "bucket": decision.bucket.key(),
                "action": decision.action.value,
                "reward": reward,
                "q_after": agent.q_for(decision.bucket)[decision.action],
                "policy_version": agent.policy_version,
                "source": source,
            }
        )

    def on_review_timeout(self, decision_id: str, listener: Optional[Any]) -> None:
        decision = self.pending.pop(decision_id, None)
        if decision is None:
            return
        decision.status = DecisionStatus.Autonomous
        event = self._events_by_decision[decision_id]
        self._apply_effects(decision, event, listener)

    def apply_feedback_command(self, fb: FeedbackRecord, decisions_by_id: dict[str, Decision],
                               listener: Optional[Any]) -> None:
        decision = decisions_by_id.get(fb.decision_id)
        if decision is None:
            raise KeyError(f"unknown decision {fb.decision_id!r}")
        agent = self.agents[(decision.entity.tenant, decision.domain)]
        override = agents_mod.apply_feedback(agent, fb, decision, self.cfg.agent)
        self.learning_log.append(
            {
                "ts": fb.ts,
                "decision_id": decision.id,
                "tenant": decision.entity.tenant,
                "bucket": decision.bucket.key(),
                "action": decision.action.value,
                "reward": fb.score,
                "q_after": agent.q_for(decision.bucket)[
                    decision.action if override is None else override
                ],
                "policy_version": agent.policy_version,
                "source": "feedback",
            }
        )
        was_pending = self.pending.pop(fb.decision_id, None) is not None
        event = self._events_by_decision.get(fb.decision_id)
        if event is not None and (was_pending or override is not None):
            self._apply_effects(decision, event, listener)

    def on_maintenance(self, now: int, listener: Optional[Any]) -> None:
        """Digest publication + federation merge + expiry, on the cadence."""
        digests = [
            intel_mod.publish_digest(kb, now, self.cfg.intel) for _, kb in sorted(self.local_kb.items())
        ]
        intel_mod.merge_digests(self.global_kb, digests)
        for kb in self.local_kb.values():
            intel_mod.expire(kb, now)
        intel_mod.expire_global(self.global_kb, now, self.cfg.intel.ttl_ms)
        self.threat_level = intel_mod.active_threat_level(self.global_kb)

    def on_synthesis(self, now: int, listener: Optional[Any]) -> None:
        for rule in policy_mod.synthesize(self.window, self.rules, now, self.cfg.policy):
            entry = {
                "ts": now,
                "rule_id": rule.id,
                "origin": rule.origin.value,
                "attribute": rule.attribute,
                "itype": rule.itype.value,
                "action": rule.action.value,
                "ttl_ms": rule.ttl_ms,
                "trigger_decision_ids": list(rule.trigger_decision_ids),
            }
            self.policy_timeline.append(entry)
            if listener is not None:
                listener.on_policy(entry)


class StaticEngine:
    def __init__(self, spec: ScenarioSpec, cfg: EngineConfig, jitter_rng: np.random.Generator):
        self.rules = baselines_mod.build_static_rules(spec, cfg.baseline)
        self.latency = LatencySampler(cfg.latency, jitter_rng)
        self.cfg = cfg
        self._seq = 0

    def handle_event(self, event: TelemetryEvent) -> Decision:
        self._seq += 1
        hit = baselines_mod.static_evaluate(self.rules, event.view())
        action, reason = hit if hit is not None else (MitigationAction.Allow, "no rule fired")
        anomaly = 1.0 if hit is not None else 0.0
        risk = agents_mod.fuse_risk(anomaly, 1.0, 0.0, self.cfg.fusion)
        return Decision(
            id=f"d-{self._seq:08d}",
            ts=event.ts,
            event_id=event.id,
            entity=event.entity,
            domain=event.domain,
            event_kind=event.kind,
            risk=risk,
            anomaly=anomaly,
            trust_at=1.0,
            intel_match=0.0,
            bucket=ContextBucket(domain=event.domain, band=risk_band(risk), intel_present=False),
            action=action,
            rationale=(agents_mod.RationaleFactor(name="static_rule", score=anomaly, detail=reason),),
            status=DecisionStatus.Autonomous,
            latency_ms=self.latency.static(),
            path="static",
        )


class MlEngine:
    """Centralized classifier: first 20% of the run (by time) is the
    labeled training slice; the model deploys at the cut and never updates.
    Events before deployment pass through unexamined."""

    def __init__(self, spec: ScenarioSpec, cfg: EngineConfig, jitter_rng: np.random.Generator,
                 events: list[TelemetryEvent]):
        self.cfg = cfg
        self.latency = LatencySampler(cfg.latency, jitter_rng)
        self.cut_ts = int(spec.duration_ms * cfg.baseline.train_fraction)
        self._seq = 0

        slice_views = [e.view() for e in events if e.ts < self.cut_ts]
        stats = baselines_mod.GlobalStats.fit(slice_views)
        self.extractor = baselines_mod.FeatureExtractor(stats, cfg.baseline.burst_window_ms)
        rows, labels = [], []
        for e in events:
            if e.ts >= self.cut_ts:
                break
            rows.append(self.extractor.features(e.view()))
            labels.append(1.0 if e.truth.malicious else 0.0)  # training slice only
        if rows:
            self.model = baselines_mod.train_classifier(
                np.asarray(rows), np.asarray(labels), cfg.baseline, stats
            )
        else:
            self.model = baselines_mod.train_classifier(
                np.zeros((1, 5)), np.zeros(1), cfg.baseline, stats
            )

    def handle_event(self, event: TelemetryEvent) -> Decision:
        self._seq += 1
        if event.ts < self.cut_ts:
            action, score, reason = MitigationAction.Allow, 0.0, "model not yet deployed"
        else:
            features = self.extractor.features(event.view())
            score, detected = baselines_mod.classify(self.model, features)
            action = MitigationAction.Alert if detected else MitigationAction.Allow
            reason = f"score={score:.4f}"
        risk = agents_mod.fuse_risk(score, 1.0, 0.0, self.cfg.fusion)
        return Decision(
            id=f"d-{self._seq:08d}",
            ts=event.ts,
            event_id=event.id,
            entity=event.entity,
            domain=event.domain,
            event_kind=event.kind,
            risk=risk,
            anomaly=score,
            trust_at=1.0,
            intel_match=0.0,
            bucket=ContextBucket(domain=event.domain, band=risk_band(risk), intel_present=False),
            action=action,
            rationale=(agents_mod.RationaleFactor(name="classifier", score=score, detail=reason),),
            status=DecisionStatus.Autonomous,
            latency_ms=self.latency.classifier(),
            path="classifier",
        )


# ============================================================================
# Simulation driver
# ============================================================================

def _model_stream_key(model: str) -> int:
    return int.from_bytes(hashlib.blake2b(model.encode(), digest_size=8).digest(), "big")


class Simulation:
    """Owns the virtual clock, the engine, and the command queue boundary.

    `listener` (optional) receives on_decision/on_policy/on_trust/on_metric
    callbacks; `command_drain` (optional) is polled between events and may
    return FeedbackRecords to apply — the gateway uses both, headless runs
    use neither.
    """

    def __init__(self, spec: ScenarioSpec, model: str, seed: int, cfg: Optional[EngineConfig] = None,
                 reviewer_attached: bool = False):
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
        self.spec = spec
        self.model = model
        self.seed = seed
        self.cfg = cfg or EngineConfig()
        self.events = generate_stream(spec, seed)
        self.truth_by_event = {e.id: e.truth for e in self.events}

        runtime_root = np.random.SeedSequence(
            [spec.seed & 0xFFFFFFFFFFFFFFFF, seed & 0xFFFFFFFFFFFFFFFF, _model_stream_key(model)]
        )
        eps_ss, jitter_ss = runtime_root.spawn(2)
        jitter_rng = np.random.default_rng(jitter_ss)

        if model == "agentic":
            self.engine: Any = AgenticEngine(
                spec, self.cfg, np.random.default_rng(eps_ss), jitter_rng, reviewer_attached
            )
        elif model == "static":
            self.engine = StaticEngine(spec, self.cfg, jitter_rng)
        else:
            self.engine = MlEngine(spec, self.cfg, jitter_rng, self.events)

        self.decisions: list[Decision] = []
        self.decisions_by_id: dict[str, Decision] = {}
        self.rejected_feedback: list[tuple[str, str]] = []
        self._sched = _Scheduler()
        self._sec_seconds = 0.0

    # -- public surface ---------------------------------------------------

    @property
    def virtual_now(self) -> int:
        return self._sched.now

    def run(self, listener: Optional[Any] = None,
            command_drain: Optional[Callable[[], list[FeedbackRecord]]] = None,
            pacer: Optional[Callable[[int], None]] = None) -> RunLog:
        start_wall = time.perf_counter()
        for event in self.events:
            self._sched.push(event.ts, 2, "telemetry", event)
        # Priorities at equal ts: maintenance (0) < disclosures/timeouts (1)
        # < telemetry (2).
        if self.model == "agentic":
            cadence = self.cfg.intel.publish_cadence_ms
            if cadence < self.spec.duration_ms:
                self._sched.push(cadence, 0, "maintenance", None)
            syn = self.cfg.policy.synthesis_cadence_ms
            if syn < self.spec.duration_ms:
                self._sched.push(syn, 0, "synthesis", None)

        while True:
            if command_drain is not None:
                for fb in command_drain():
                    try:
                        self._apply_feedback(fb, listener)
                    except (KeyError, ValueError) as err:
                        self.rejected_feedback.append((fb.decision_id, str(err)))
            item = self._sched.pop()
            if item is None:
                break
            ts, kind, payload = item
            if pacer is not None and kind == "telemetry":
                try:
                    pacer(ts)
                except StopSimulation:
                    break
            t0 = time.perf_counter()
            self._dispatch(ts, kind, payload, listener)
            self._sec_seconds += time.perf_counter() - t0

        wall = time.perf_counter() - start_wall
        return self._build_log(wall)

    def metrics_snapshot(self, now: Optional[int] = None) -> dict:
        """Running confusion over already-disclosed events, for live panels."""
        horizon = (now if now is not None else self._sched.now) - self.cfg.agent.disclosure_delay_ms
        by_event = {d.event_id: d for d in self.decisions}
        tp = fp = tn = fn = 0
        for event in self.events:
            if event.ts > horizon:
                break
            d = by_event.get(event.id)
            if d is None:
                continue
            detected = detection_label(d, self.cfg.detection_min_severity)
            if event.truth.malicious:
                tp += detected
                fn += not detected
            else:
                fp += detected
                tn += not detected
        matrix = {"tp": tp, "fp": fp, "tn": tn, "fn": fn}
        snap = {"model": self.model, "seed": self.seed, "virtual_now": self._sched.now,
                "disclosed_confusion": matrix, **prf(matrix),
                "decisions": len(self.decisions)}
        return snap

    # -- internals --------------------------------------------------------

    def _schedule_timer(self, ts: int, kind: str, payload: Any) -> None:
        self._sched.push(ts, 1, kind, payload)

    def _dispatch(self, ts: int, kind: str, payload: Any, listener: Optional[Any]) -> None:
        if kind == "telemetry":
            event: TelemetryEvent = payload
            if self.model == "agentic":
                decision = self.engine.handle_event(event, self._schedule_timer, listener)
            else:
                decision = self.engine.handle_event(event)
            self.decisions.append(decision)
            self.decisions_by_id[decision.id] = decision
            if listener is not None:
                listener.on_decision(_decision_to_dict(decision))
        elif kind == "disclosure":
            decision_id, event_id = payload
            decision = self.decisions_by_id[decision_id]
            self.engine.on_disclosure(decision, self.truth_by_event[event_id])
        elif kind == "maintenance":
            self.engine.on_maintenance(ts, listener)
            if listener is not None:
                listener.on_metric(self.metrics_snapshot(ts))
            nxt = ts + self.cfg.intel.publish_cadence_ms
            if nxt < self.spec.duration_ms:
                self._sched.push(nxt, 0, "maintenance", None)
        elif kind == "synthesis":
            self.engine.on_synthesis(ts, listener)
            nxt = ts + self.cfg.policy.synthesis_cadence_ms
            if nxt < self.spec.duration_ms:
                self._sched.push(nxt, 0, "synthesis", None)
        elif kind == "review_timeout":
            self.engine.on_review_timeout(payload, listener)
        else:  # pragma: no cover - guarded by construction
            raise RuntimeError(f"unknown timer kind {kind!r}")

    def _apply_feedback(self, fb: FeedbackRecord, listener: Optional[Any]) -> None:
        if self.model != "agentic":
            raise ValueError("feedback applies to the agentic model only")
        self.engine.apply_feedback_command(fb, self.decisions_by_id, listener)

    def _build_log(self, wall: float) -> RunLog:
        if self.model == "agentic":
            timeline = list(self.engine.policy_timeline)
            learning = list(self.engine.learning_log)
            trust_snapshot = {
                key: {"trust": round(s.trust, 6), "incidents": s.incident_count}
                for key, s in sorted(self.engine.trust.items())
            }
            profile_snapshot = {
                key: profiling_mod.profile_snapshot(p) for key, p in sorted(self.engine.profiles.items())
            }
            rules_by_id = {r.id: r for r in self.engine.rules.rules}
        else:
            timeline, learning, trust_snapshot, profile_snapshot, rules_by_id = [], [], {}, {}, {}
        injections = []
        for j, inj in enumerate(self.spec.injections):
            injections.append(
                InjectionSummary(
                    attack_id=f"{inj.family.value.lower()}-{j}",
                    family=inj.family.value,
                    start_ms=inj.start_ms,
                    end_ms=inj.end_ms,
                    recurrence_start_ms=inj.recurrence.start_ms if inj.recurrence else None,
                    recurrence_end_ms=inj.recurrence.end_ms if inj.recurrence else None,
                    required_severity=FAMILY_REQUIRED_SEVERITY[inj.family],
                )
            )
        return RunLog(
            scenario_name=self.spec.name,
            scenario_digest=self.spec.digest(),
            model=self.model,
            seed=self.seed,
            events=self.events,
            decisions=self.decisions,
            policy_timeline=timeline,
            learning_log=learning,
            trust_snapshot=trust_snapshot,
            profile_snapshot=profile_snapshot,
            injections=injections,
            rules_by_id=rules_by_id,
            wall_seconds=wall,
            security_seconds=self._sec_seconds,
        )


def run(spec: ScenarioSpec, model: str, seed: int, cfg: Optional[EngineConfig] = None) -> RunLog:
    """Headless single run: (scenario, model, seed) -> RunLog."""
    return Simulation(spec, model, seed, cfg).run()


# ============================================================================
# Persistence
# ============================================================================

def write_run_dir(run_log: RunLog, out_dir: Path, cfg: EngineConfig, export_truth: bool = False) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "events.ndjson").write_text(
        export_ndjson(run_log.events, include_truth=export_truth), encoding="utf-8"
    )
    (out_dir / "decisions.ndjson").write_text(
        "".join(canonical_json(_decision_to_dict(d)) + "\n" for d in run_log.decisions),
        encoding="utf-8",
    )
    (out_dir / "policy_timeline.json").write_text(
        canonical_json(run_log.policy_timeline) + "\n", encoding="utf-8"
    )
    (out_dir / "learning.ndjson").write_text(
        "".join(canonical_json(entry) + "\n" for entry in run_log.learning_log), encoding="utf-8"
    )
    (out_dir / "snapshots.json").write_text(
        canonical_json({"trust": run_log.trust_snapshot, "profiles": run_log.profile_snapshot}) + "\n",
        encoding="utf-8",
    )
    report = run_report(run_log, cfg)
    (out_dir / "report.json").write_text(canonical_json(report) + "\n", encoding="utf-8")
    (out_dir / "report.md").write_text(render_run_report_md(report), encoding="utf-8")
    (out_dir / "runtime.json").write_text(
        json.dumps(
            {
                "wall_seconds": round(run_log.wall_seconds, 6),
                "security_seconds": round(run_log.security_seconds, 6),
                "events": len(run_log.events),
                "mean_event_processing_ms": round(
                    1000.0 * run_log.security_seconds / max(1, len(run_log.events)), 6
                ),
                "security_share_of_wall": round(
                    run_log.security_seconds / run_log.wall_seconds, 6
                ) if run_log.wall_seconds > 0 else None,
                "caveat": OVERHEAD_CAVEAT,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )


OVERHEAD_CAVEAT = (
    "Wall-clock figures are a desk-scale processing-cost analog and vary by host; "
    "they are intentionally excluded from the deterministic report artifacts. "
    "Absolute CPU/memory overhead of a production deployment is not reproduced here."
)

LATENCY_CAVEAT = (
    "Decision latencies are virtual model parameters (per-path hop costs), not "
    "measurements; the meaningful claim is the ordering between pipelines and its "
    "architectural cause (local decisions skip the coordination hops)."
)


def _fmt(x: Optional[float], digits: int = 3) -> str:
    return "n/a" if x is None else f"{x:.{digits}f}"


def render_run_report_md(report: dict) -> str:
    lines = [
        f"# Run report — {report['model']} / seed {report['seed']}",
        "",
        f"Scenario: `{report['scenario']}` (digest `{report['scenario_digest'][:12]}…`)",
        f"Events: {report['events']} ({report['malicious_events']} malicious)",
        "",
        "| metric | value |",
        "|---|---|",
        f"| precision | {_fmt(report['precision'])} |",
        f"| recall | {_fmt(report['recall'])} |",
        f"| f1 | {_fmt(report['f1'])} |",
        f"| adaptability | {_fmt(report['adaptability'])} |",
        f"| learned rules | {report['learned_rules']} |",
        "",
        "Per-family recall: "
        + ", ".join(f"{fam} {_fmt(r)}" for fam, r in report["per_family_recall"].items()),
        "",
        "| latency path | mean ms | median | p95 | n |",
        "|---|---|---|---|---|",
    ]
    for path, stats in sorted(report["latency"].items()):
        lines.append(
            f"| {path} | {stats['mean']:.1f} | {stats['median']:.1f} | {stats['p95']:.1f} | {stats['count']} |"
        )
    lines += ["", f"_{LATENCY_CAVEAT}_", ""]
    return "\n".join(lines)


# ============================================================================
# Cross-model comparison report
# ============================================================================

def _mean_or_none(values: list[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return float(np.mean(present)) if present else None


def comparison_report(runs: list[RunLog], cfg: EngineConfig) -> dict:
    if not runs:
        raise ValueError("no runs to report on")
    digests = {r.scenario_digest for r in runs}
    if len(digests) != 1:
        raise ValueError(f"mismatched scenario digests: {sorted(digests)}")
    by_model: dict[str, list[RunLog]] = {}
    for r in runs:
        by_model.setdefault(r.model, []).append(r)
    seed_sets = {m: tuple(sorted(r.seed for r in rs)) for m, rs in by_model.items()}
    if len(set(seed_sets.values())) != 1:
        raise ValueError(f"models ran different seed sets: {seed_sets}")

    models_out: dict[str, dict] = {}
    for model, rs in sorted(by_model.items()):
        per_seed = {}
        pooled = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
        family_acc: dict[str, list[float]] = {}
        latencies: list[float] = []
        path_stats: dict[str, list[float]] = {}
        adaptabilities = []
        for r in sorted(rs, key=lambda x: x.seed):
            rep = run_report(r, cfg)
            per_seed[str(r.seed)] = {
                "precision": rep["precision"],
                "recall": rep["recall"],
                "f1": rep["f1"],
                "adaptability": rep["adaptability"],
                "latency_mean": rep["latency"]["overall"]["mean"],
            }
            for k in pooled:
                pooled[k] += rep["confusion"][k]
            for fam, rec in rep["per_family_recall"].items():
                family_acc.setdefault(fam, []).append(rec)
            for d in r.decisions:
                latencies.append(d.latency_ms)
                path_stats.setdefault(d.path, []).append(d.latency_ms)
            if rep["adaptability"] is not None:
                adaptabilities.append(rep["adaptability"])
        arr = np.asarray(latencies)
        models_out[model] = {
            "per_seed": per_seed,
            "mean_precision": _mean_or_none([v["precision"] for v in per_seed.values()]),
            "mean_recall": _mean_or_none([v["recall"] for v in per_seed.values()]),
            "mean_f1": _mean_or_none([v["f1"] for v in per_seed.values()]),
            "pooled_confusion": pooled,
            "per_family_recall": {fam: float(np.mean(vals)) for fam, vals in sorted(family_acc.items())},
            "latency": {
                "mean": float(arr.mean()),
                "median": float(np.median(arr)),
                "p95": float(np.percentile(arr, 95)),
                "per_path": {
                    p: {"mean": float(np.mean(v)), "count": len(v)} for p, v in sorted(path_stats.items())
                },
            },
            "mean_adaptability": float(np.mean(adaptabilities)) if adaptabilities else None,
        }

    ranked = sorted(
        (m for m in models_out if models_out[m]["mean_f1"] is not None),
        key=lambda m: -models_out[m]["mean_f1"],
    )
    seeds = sorted({r.seed for r in runs})
    ordinal_hits = 0
    if set(by_model) == set(MODELS):
        for s in seeds:
            f1 = {m: models_out[m]["per_seed"][str(s)]["f1"] for m in MODELS}
            if all(v is not None for v in f1.values()) and f1["agentic"] > f1["ml"] > f1["static"]:
                ordinal_hits += 1
    comparisons: dict[str, Any] = {
        "f1_ranking": ranked,
        "latency_ranking": sorted(models_out, key=lambda m: models_out[m]["latency"]["mean"]),
        "ordinal_seed_fraction": ordinal_hits / len(seeds) if seeds and set(by_model) == set(MODELS) else None,
    }
    if "agentic" in models_out and "static" in models_out:
        a, s = models_out["agentic"], models_out["static"]
        if a["mean_f1"] is not None and s["mean_f1"] is not None:
            comparisons["f1_delta_agentic_minus_static"] = a["mean_f1"] - s["mean_f1"]
        aa, sa = a["mean_adaptability"], s["mean_adaptability"]
        comparisons["adaptability_delta_agentic_minus_static"] = (
            (aa or 0.0) - (sa or 0.0) if (aa is not None or sa is not None) else None
        )
        comparisons["adaptability_note"] = (
            "Adaptability is compared ordinally (learning system above non-learning baselines); "
            "no absolute improvement factor is claimed."
        )
    return {
        "scenario": runs[0].scenario_name,
        "scenario_digest": runs[0].scenario_digest,
        "seeds": seeds,
        "models": models_out,
        "comparisons": comparisons,
        "caveats": [LATENCY_CAVEAT, OVERHEAD_CAVEAT],
    }


def render_comparison_md(report: dict) -> str:
    lines = [
        f"# Comparison report — scenario `{report['scenario']}`",
        "",
        f"Seeds: {', '.join(str(s) for s in report['seeds'])}",
        "",
        "## Detection",
        "",
        "| model | precision | recall | f1 | adaptability |",
        "|---|---|---|---|---|",
    ]
    for model, m in sorted(report["models"].items()):
        lines.append(
            f"| {model} | {_fmt(m['mean_precision'])} | {_fmt(m['mean_recall'])} "
            f"| {_fmt(m['mean_f1'])} | {_fmt(m['mean_adaptability'])} |"
        )
    lines += [
        "",
        "## Decision latency (virtual ms)",
        "",
        "| model | mean | median | p95 |",
        "|---|---|---|---|",
    ]
    for model, m in sorted(report["models"].items()):
        lat = m["latency"]
        lines.append(f"| {model} | {lat['mean']:.1f} | {lat['median']:.1f} | {lat['p95']:.1f} |")
    lines += [
        "",
        "## Per-family recall",
        "",
        "| model | " + " | ".join(sorted(
            {fam for m in report["models"].values() for fam in m["per_family_recall"]}
        )) + " |",
        "|---|" + "---|" * len({fam for m in report["models"].values() for fam in m["per_family_recall"]}),
    ]
    families = sorted({fam for m in report["models"].values() for fam in m["per_family_recall"]})
    for model, m in sorted(report["models"].items()):
        cells = " | ".join(_fmt(m["per_family_recall"].get(fam)) for fam in families)
        lines.append(f"| {model} | {cells} |")
    lines += [""]
    for caveat in report["caveats"]:
        lines.append(f"_{caveat}_")
        lines.append("")
    return "\n".join(lines)
