"""Streaming behavioral fingerprints and anomaly scoring.

Each entity accumulates an online profile of its own activity: exponentially
weighted mean/variance per numeric feature, and exponentially decayed value
counts per categorical attribute. Nothing here uses fixed cutoffs — an
observation is scored against the entity's *own* moving baseline, which is
the property that lets the same machinery flag a quiet service making one
odd call and ignore a chatty one doing its usual volume.

Numeric deviation
    z = |x - ew_mean| / max(sqrt(ew_var), eps)
    score = 1 / (1 + exp(-(z - z0)))        # logistic knee at z0 = 3 sigma

Categorical rarity (Laplace-smoothed, decayed)
    score = 1 - (weight(v) + a) / (total + a * (V + 1))

Cold start: a brand-new entity is scored against the tenant-level aggregate
profile, fading linearly to its own profile as it matures (m = count / M).
An empty history yields score 0 — absence of evidence is not anomaly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import ProfilingConfig
from .events import DetectorView, EntityRef


@dataclass
class FeatureStat:
    """Exponentially weighted running mean and variance of one feature.

    The recurrence (for weight 0 < lam < 1) is the standard one-pass form:

        mean' = (1 - lam) * mean + lam * x
        var'  = (1 - lam) * var  + lam * (x - mean) * (x - mean')

    The first observation initializes mean = x, var = 0. With constant
    input the variance contracts geometrically to zero, so a perfectly
    regular entity ends up with a razor-thin baseline — which is exactly
    why the variance floor exists at scoring time.
    """

    ew_mean: float = 0.0
    ew_var: float = 0.0
    count: int = 0

    def update(self, x: float, decay: float) -> None:
        if self.count == 0:
            self.ew_mean = x
            self.ew_var = 0.0
        else:
            prev_mean = self.ew_mean
            self.ew_mean = (1.0 - decay) * prev_mean + decay * x
            self.ew_var = (1.0 - decay) * self.ew_var + decay * (x - prev_mean) * (x - self.ew_mean)
            if self.ew_var < 0.0:  # guard against float round-off
                self.ew_var = 0.0
        self.count += 1


@dataclass
class CategoricalStat:
    """Decayed value-frequency table: seen weights fade, the observed value
    gains 1. `total` is maintained incrementally and equals sum(counts)."""

    counts: dict[str, float] = field(default_factory=dict)
    total: float = 0.0

    def update(self, value: str, decay: float) -> None:
        keep = 1.0 - decay
        for key in self.counts:
            self.counts[key] *= keep
        self.counts[value] = self.counts.get(value, 0.0) + 1.0
        self.total = self.total * keep + 1.0


@dataclass
class BehaviorProfile:
    entity: EntityRef
    numeric: dict[str, FeatureStat] = field(default_factory=dict)
    categorical: dict[str, CategoricalStat] = field(default_factory=dict)
    event_count: int = 0


@dataclass(frozen=True)
class AnomalyFactor:
    feature: str
    score: float
    observed: str


@dataclass(frozen=True)
class AnomalyAssessment:
    score: float
    factors: tuple[AnomalyFactor, ...]


def update_profile(profile: BehaviorProfile, event: DetectorView, cfg: ProfilingConfig) -> BehaviorProfile:
    """Absorb one event into the profile (in place; returns the profile)."""
    if profile.entity != event.entity:
        raise ValueError(
            f"profile for {profile.entity.key()} cannot absorb event from {event.entity.key()}"
        )
    _update_stats(profile, event, cfg)
    return profile


def _update_stats(profile: BehaviorProfile, event: DetectorView, cfg: ProfilingConfig) -> None:
    for name, value in event.numeric.items():
        stat = profile.numeric.get(name)
        if stat is None:
            stat = profile.numeric[name] = FeatureStat()
        stat.update(value, cfg.decay)
    for attr, value in event.categorical.items():
        cstat = profile.categorical.get(attr)
        if cstat is None:
            cstat = profile.categorical[attr] = CategoricalStat()
        cstat.update(value, cfg.decay)
    profile.event_count += 1


def update_peer_profile(peer: BehaviorProfile, event: DetectorView, cfg: ProfilingConfig) -> BehaviorProfile:
    """Tenant aggregate: same update rule, fed by every entity in the tenant."""
    _update_stats(peer, event, cfg)
    return peer


def numeric_feature_score(stat: FeatureStat, x: float, cfg: ProfilingConfig) -> float:
    if stat.count < 1:
        raise ValueError("numeric score needs at least one prior observation")
    z = abs(x - stat.ew_mean) / max(math.sqrt(stat.ew_var), cfg.variance_floor)
    return 1.0 / (1.0 + math.exp(-(z - cfg.z_midpoint)))


def categorical_feature_score(stat: CategoricalStat, value: str, cfg: ProfilingConfig) -> float:
    distinct = len(stat.counts)
    weight = stat.counts.get(value, 0.0)
    a = cfg.laplace_alpha
    return 1.0 - (weight + a) / (stat.total + a * (distinct + 1))


def _blended_scores(
    profile: BehaviorProfile,
    peer: BehaviorProfile,
    event: DetectorView,
    cfg: ProfilingConfig,
) -> list[AnomalyFactor]:
    maturity = min(profile.event_count / cfg.maturity_threshold, 1.0)
    factors: list[AnomalyFactor] = []

    for name, x in event.numeric.items():
        own = profile.numeric.get(name)
        pr = peer.numeric.get(name)
        s_own = numeric_feature_score(own, x, cfg) if own and own.count >= 1 else 0.0
        s_peer = numeric_feature_score(pr, x, cfg) if pr and pr.count >= 1 else 0.0
        score = maturity * s_own + (1.0 - maturity) * s_peer
        factors.append(AnomalyFactor(feature=f"numeric:{name}", score=score, observed=f"{x:.3f}"))

    for attr, value in event.categorical.items():
        own_c = profile.categorical.get(attr)
        peer_c = peer.categorical.get(attr)
        s_own = categorical_feature_score(own_c, value, cfg) if own_c else 0.0
        s_peer = categorical_feature_score(peer_c, value, cfg) if peer_c else 0.0
        score = maturity * s_own + (1.0 - maturity) * s_peer
        factors.append(AnomalyFactor(feature=f"categorical:{attr}", score=score, observed=value))

    return factors


def assess(
    profile: BehaviorProfile,
    peer: BehaviorProfile,
    event: DetectorView,
    cfg: ProfilingConfig,
) -> AnomalyAssessment:
    """Score one event: top-k mean of the per-feature scores.

    Averaging only the strongest few features keeps the combined score
    from being diluted by the many features that look normal during a
    targeted attack, while a single noisy feature cannot saturate it.
    """
    factors = _blended_scores(profile, peer, event, cfg)
    factors.sort(key=lambda f: (-f.score, f.feature))
    if not factors:
        return AnomalyAssessment(score=0.0, factors=())
    top = factors[: cfg.top_k]
    score = sum(f.score for f in top) / len(top)
    score = min(1.0, max(0.0, score))
    return AnomalyAssessment(score=score, factors=tuple(factors))


def profile_snapshot(profile: BehaviorProfile, top_n: int = 10) -> dict:
    """JSON-friendly export used by run logs and the dashboard."""
    return {
        "entity": profile.entity.key(),
        "event_count": profile.event_count,
        "numeric": {
            name: {"mean": round(s.ew_mean, 6), "var": round(s.ew_var, 6), "count": s.count}
            for name, s in sorted(profile.numeric.items())
        },
        "categorical": {
            attr: {
                v: round(w, 6)
                for v, w in sorted(c.counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
            }
            for attr, c in sorted(profile.categorical.items())
        },
    }
