"""Federated threat intelligence: local indicators, digests, merge, match.

Each tenant node keeps a private knowledge base keyed by salted 64-bit
hashes of attribute values; raw strings never leave the node. On a fixed
cadence a node publishes a digest of its repeat offenders; the federation
merges digests with a noisy-or on confidence and max on severity. An entry
becomes globally actionable ("promoted") once k distinct nodes have
reported it — one tenant's noise is not the consortium's policy.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Collection, Iterable, Optional

from .config import IntelConfig
from .events import DetectorView


class IndicatorType(str, Enum):
    Geo = "Geo"
    CredentialHash = "CredentialHash"
    SourceSubnet = "SourceSubnet"
    DeviceFingerprint = "DeviceFingerprint"


#: Event attributes that may seed indicators, in match order.
ATTRIBUTE_TYPES: tuple[tuple[str, IndicatorType], ...] = (
    ("geo", IndicatorType.Geo),
    ("credential_hash", IndicatorType.CredentialHash),
    ("source_subnet", IndicatorType.SourceSubnet),
    ("device_fingerprint", IndicatorType.DeviceFingerprint),
)


def hash_value(value: str, salt: str) -> int:
    """Deployment-salted 64-bit hash; stable across runs and platforms."""
    digest = hashlib.blake2b(value.encode("utf-8"), key=salt.encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


@dataclass
class ThreatIndicator:
    itype: IndicatorType
    value_hash: int
    severity: float
    confidence: float
    first_seen: int
    last_seen: int
    ttl_ms: int
    local_count: int = 1


@dataclass(frozen=True)
class DigestEntry:
    itype: IndicatorType
    value_hash: int
    severity: float
    confidence: float
    local_count: int


@dataclass(frozen=True)
class IndicatorDigest:
    node: str
    published_ts: int
    entries: tuple[DigestEntry, ...]

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "published_ts": self.published_ts,
            "entries": [
                {
                    "itype": e.itype.value,
                    "value_hash": e.value_hash,
                    "severity": round(e.severity, 6),
                    "confidence": round(e.confidence, 6),
                    "local_count": e.local_count,
                }
                for e in self.entries
            ],
        }


@dataclass
class LocalKnowledgeBase:
    tenant: str
    indicators: dict[tuple[IndicatorType, int], ThreatIndicator] = field(default_factory=dict)


@dataclass
class GlobalEntry:
    itype: IndicatorType
    value_hash: int
    severity: float
    confidence: float
    last_seen: int
    total_count: int
    node_set: set[str] = field(default_factory=set)
    # Per-node latest contribution, so re-publishing is idempotent.
    node_conf: dict[str, float] = field(default_factory=dict)
    node_count: dict[str, int] = field(default_factory=dict)


@dataclass
class GlobalKnowledgeBase:
    promotion_k: int
    entries: dict[tuple[IndicatorType, int], GlobalEntry] = field(default_factory=dict)

    def promoted(self) -> Iterable[GlobalEntry]:
        return (e for e in self.entries.values() if len(e.node_set) >= self.promotion_k)


def record_local(
    kb: LocalKnowledgeBase,
    event: DetectorView,
    risk: float,
    action_severity: float,
    clock: int,
    cfg: IntelConfig,
    suspicious_attrs: Optional[Collection[str]] = None,
) -> None:
    """Upsert indicators from a confirmed-suspicious decision's event.

    Only decisions with risk >= 0.7 and an executed mitigation feed the
    knowledge base; everything else is presumed noise. When the caller
    knows which attributes actually looked anomalous, pass them as
    ``suspicious_attrs`` so a volumetric incident does not leak the
    entity's own routine geo/credential values into shared intel.
    """
    if risk < cfg.record_min_risk or action_severity < cfg.record_min_severity:
        return
    for attr, itype in ATTRIBUTE_TYPES:
        value = event.categorical.get(attr)
        if value is None:
            continue
        if suspicious_attrs is not None and attr not in suspicious_attrs:
            continue
        key = (itype, hash_value(value, cfg.salt))
        existing = kb.indicators.get(key)
        if existing is None:
            kb.indicators[key] = ThreatIndicator(
                itype=itype,
                value_hash=key[1],
                severity=risk,
                confidence=min(1.0, 1 / cfg.confidence_divisor),
                first_seen=clock,
                last_seen=clock,
                ttl_ms=cfg.ttl_ms,
            )
        else:
            existing.local_count += 1
            existing.severity = max(existing.severity, risk)
            existing.confidence = min(1.0, existing.local_count / cfg.confidence_divisor)
            existing.last_seen = clock


def publish_digest(kb: LocalKnowledgeBase, clock: int, cfg: IntelConfig) -> IndicatorDigest:
    entries = tuple(
        DigestEntry(
            itype=ind.itype,
            value_hash=ind.value_hash,
            severity=ind.severity,
            confidence=ind.confidence,
            local_count=ind.local_count,
        )
        for key, ind in sorted(kb.indicators.items(), key=lambda kv: (kv[0][0].value, kv[0][1]))
        if ind.local_count >= cfg.publish_min_count
    )
    return IndicatorDigest(node=kb.tenant, published_ts=clock, entries=entries)


def merge_digests(global_kb: GlobalKnowledgeBase, digests: Iterable[IndicatorDigest]) -> GlobalKnowledgeBase:
    """Fold digests into the federation view.

    Confidence is a noisy-or over the latest contribution of each node,
    severity is the max, counts sum the latest per-node figures: the merge
    is order-independent and republished digests do not double count.
    """
    for digest in digests:
        for entry in digest.entries:
            key = (entry.itype, entry.value_hash)
            g = global_kb.entries.get(key)
            if g is None:
                g = global_kb.entries[key] = GlobalEntry(
                    itype=entry.itype,
                    value_hash=entry.value_hash,
                    severity=0.0,
                    confidence=0.0,
                    last_seen=digest.published_ts,
                    total_count=0,
                )
            g.node_set.add(digest.node)
            g.node_conf[digest.node] = entry.confidence
            g.node_count[digest.node] = entry.local_count
            g.severity = max(g.severity, entry.severity)
            g.last_seen = max(g.last_seen, digest.published_ts)
            prod = 1.0
            for conf in g.node_conf.values():
                prod *= 1.0 - conf
            g.confidence = 1.0 - prod
            g.total_count = sum(g.node_count.values())
    return global_kb


def match(
    local: Optional[LocalKnowledgeBase],
    global_kb: Optional[GlobalKnowledgeBase],
    event: DetectorView,
    cfg: IntelConfig,
) -> float:
    """Max severity*confidence over indicators matching the event's
    attributes — own-tenant local entries plus promoted global ones."""
    best = 0.0
    for attr, itype in ATTRIBUTE_TYPES:
        value = event.categorical.get(attr)
        if value is None:
            continue
        key = (itype, hash_value(value, cfg.salt))
        if local is not None:
            ind = local.indicators.get(key)
            if ind is not None:
                best = max(best, ind.severity * ind.confidence)
        if global_kb is not None:
            g = global_kb.entries.get(key)
            if g is not None and len(g.node_set) >= global_kb.promotion_k:
                best = max(best, g.severity * g.confidence)
    return min(1.0, best)


def expire(kb: LocalKnowledgeBase, clock: int) -> None:
    stale = [key for key, ind in kb.indicators.items() if clock > ind.last_seen + ind.ttl_ms]
    for key in stale:
        del kb.indicators[key]


def expire_global(global_kb: GlobalKnowledgeBase, clock: int, ttl_ms: int) -> None:
    stale = [key for key, g in global_kb.entries.items() if clock > g.last_seen + ttl_ms]
    for key in stale:
        del global_kb.entries[key]


def active_threat_level(global_kb: GlobalKnowledgeBase) -> float:
    level = 0.0
    for entry in global_kb.promoted():
        level = max(level, entry.severity * entry.confidence)
    return min(1.0, level)
