"""Comparison systems: a static rule engine and a batch-trained classifier.

Both are deliberately competent and deliberately rigid. The static engine
gets fixed numeric thresholds calibrated from the scenario's configured
benign distributions, a plaintext geo blocklist, and signature pairs for
every scripted family except the zero-day — so its blind spot is exactly
the attack whose signature nobody had. The classifier is a centralized,
batch-trained logistic model over five global features; it is frozen after
the training cut and alerts rather than mitigates.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .agents import MitigationAction
from .config import BaselineConfig
from .events import (
    AttackFamily,
    DetectorView,
    EventKind,
    ScenarioSpec,
)


# ============================================================================
# Static rule engine
# ============================================================================

@dataclass(frozen=True)
class StaticRuleSet:
    numeric_thresholds: dict[str, float]          # feature -> fire above this
    geo_blocklist: frozenset[str]                 # plaintext values
    signatures: frozenset[tuple[str, str]]        # (attribute, plaintext value)


def build_static_rules(spec: ScenarioSpec, cfg: BaselineConfig) -> StaticRuleSet:
    """Calibrate once from the scenario's configured distributions.

    Thresholds are global (one number per feature, the most permissive that
    stays quiet for the noisiest configured entity). Signatures come from
    the scripted non-zero-day campaigns — the knowledge a rule vendor would
    plausibly ship.
    """
    thresholds: dict[str, float] = {}
    for tenant in spec.tenants:
        for entity in tenant.entities:
            for name, ns in entity.numeric.items():
                candidate = ns.mean + cfg.threshold_sigma * ns.stddev
                if candidate > thresholds.get(name, float("-inf")):
                    thresholds[name] = candidate

    blocklist: set[str] = set()
    signatures: set[tuple[str, str]] = set()
    for injection in spec.injections:
        params = dict(injection.params)
        if injection.recurrence is not None:
            params.update({k: v for k, v in injection.recurrence.overrides.items() if isinstance(v, str)})
        if injection.family is AttackFamily.CredentialStuffing:
            blocklist.add(str(injection.params["geo"]))
            signatures.add(("credential_hash", str(injection.params["credential_hash"])))
            if "credential_hash" in (injection.recurrence.overrides if injection.recurrence else {}):
                signatures.add(("credential_hash", str(injection.recurrence.overrides["credential_hash"])))
            if "device_fingerprint" in injection.params:
                signatures.add(("device_fingerprint", str(injection.params["device_fingerprint"])))
        elif injection.family is AttackFamily.LateralMovement:
            signatures.add(("peer_service", str(injection.params["peer_service"])))
        # ApiAbuse is purely volumetric: nothing to sign. ZeroDay: excluded
        # by definition — no signature exists before the attack.
    return StaticRuleSet(
        numeric_thresholds=thresholds,
        geo_blocklist=frozenset(blocklist),
        signatures=frozenset(signatures),
    )


def static_evaluate(rules: StaticRuleSet, event: DetectorView) -> Optional[tuple[MitigationAction, str]]:
    """Stateless evaluation: (action, reason) on a hit, None otherwise."""
    for name, threshold in sorted(rules.numeric_thresholds.items()):
        value = event.numeric.get(name)
        if value is not None and value > threshold:
            return MitigationAction.Throttle, f"threshold:{name}>{threshold:.1f}"
    geo = event.categorical.get("geo")
    if geo is not None and geo in rules.geo_blocklist:
        return MitigationAction.Alert, f"blocklist:geo={geo}"
    for attr, value in sorted(event.categorical.items()):
        if (attr, value) in rules.signatures:
            return MitigationAction.Alert, f"signature:{attr}={value}"
    return None


# ============================================================================
# Batch linear classifier
# ============================================================================

_FEATURE_NAMES = ("rate_z", "payload_z", "geo_rarity", "hour_deviation", "login_burst")


@dataclass
class GlobalStats:
    """Training-slice global statistics; frozen with the model."""

    rate_mean: float
    rate_std: float
    payload_mean: float
    payload_std: float
    geo_freq: dict[str, float]
    hour_freq: dict[str, float]

    @classmethod
    def fit(cls, views: Sequence[DetectorView]) -> "GlobalStats":
        rates = np.array([v.numeric.get("request_rate", 0.0) for v in views], dtype=float)
        payloads = np.array([v.numeric.get("payload_bytes", 0.0) for v in views], dtype=float)
        geo_counts: dict[str, int] = {}
        hour_counts: dict[str, int] = {}
        for view in views:
            geo = view.categorical.get("geo")
            if geo is not None:
                geo_counts[geo] = geo_counts.get(geo, 0) + 1
            hour = view.categorical.get("hour_of_day")
            if hour is not None:
                hour_counts[hour] = hour_counts.get(hour, 0) + 1
        n_geo = max(1, sum(geo_counts.values()))
        n_hour = max(1, sum(hour_counts.values()))
        return cls(
            rate_mean=float(rates.mean()) if len(rates) else 0.0,
            rate_std=max(float(rates.std()), 1e-6) if len(rates) else 1.0,
            payload_mean=float(payloads.mean()) if len(payloads) else 0.0,
            payload_std=max(float(payloads.std()), 1e-6) if len(payloads) else 1.0,
            geo_freq={g: c / n_geo for g, c in geo_counts.items()},
            hour_freq={h: c / n_hour for h, c in hour_counts.items()},
        )


class FeatureExtractor:
    """Streaming feature computation. Call exactly once per event in time
    order — the login-burst feature depends on each entity's recent
    history, tracked here."""

    def __init__(self, stats: GlobalStats, burst_window_ms: int):
        self.stats = stats
        self.burst_window_ms = burst_window_ms
        self._logins: dict[str, deque] = {}

    def features(self, view: DetectorView) -> np.ndarray:
        s = self.stats
        rate_z = (view.numeric.get("request_rate", 0.0) - s.rate_mean) / s.rate_std
        payload_z = (view.numeric.get("payload_bytes", 0.0) - s.payload_mean) / s.payload_std
        geo_rarity = 1.0 - s.geo_freq.get(view.categorical.get("geo", ""), 0.0)
        hour_deviation = 1.0 - s.hour_freq.get(view.categorical.get("hour_of_day", ""), 0.0)

        key = view.entity.key()
        history = self._logins.get(key)
        if history is None:
            history = self._logins[key] = deque()
        cutoff = view.ts - self.burst_window_ms
        while history and history[0] < cutoff:
            history.popleft()
        burst = float(len(history))
        if view.kind is EventKind.Login:
            history.append(view.ts)

        return np.array([rate_z, payload_z, geo_rarity, hour_deviation, burst], dtype=float)


@dataclass
class LinearClassifierModel:
    weights: np.ndarray
    bias: float
    feature_mean: np.ndarray
    feature_std: np.ndarray
    threshold: float
    trained: bool = False
    always_benign: bool = False
    stats: Optional[GlobalStats] = None

    def weights_digest(self) -> str:
        payload = json.dumps(
            {
                "w": [round(float(x), 12) for x in self.weights],
                "b": round(float(self.bias), 12),
                "mu": [round(float(x), 12) for x in self.feature_mean],
                "sd": [round(float(x), 12) for x in self.feature_std],
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "features": list(_FEATURE_NAMES),
            "weights": [float(x) for x in self.weights],
            "bias": float(self.bias),
            "feature_mean": [float(x) for x in self.feature_mean],
            "feature_std": [float(x) for x in self.feature_std],
            "threshold": self.threshold,
            "always_benign": self.always_benign,
        }


def train_classifier(
    feature_rows: np.ndarray,
    labels: np.ndarray,
    cfg: BaselineConfig,
    stats: Optional[GlobalStats] = None,
) -> LinearClassifierModel:
    """Batch logistic regression by full-gradient descent.

    Fixed epochs and step size, data-order independent (whole-batch
    gradients), so two trainings on the same slice produce bit-identical
    weights.
    """
    if len(feature_rows) == 0:
        raise ValueError("empty training slice")
    labels = labels.astype(float)
    n_features = feature_rows.shape[1]
    if labels.min() == labels.max():
        return LinearClassifierModel(
            weights=np.zeros(n_features),
            bias=0.0,
            feature_mean=np.zeros(n_features),
            feature_std=np.ones(n_features),
            threshold=cfg.threshold,
            trained=True,
            always_benign=True,
            stats=stats,
        )
    mu = feature_rows.mean(axis=0)
    sd = np.maximum(feature_rows.std(axis=0), 1e-6)
    x = (feature_rows - mu) / sd
    n = len(x)
    w = np.zeros(n_features)
    b = 0.0
    for _ in range(cfg.epochs):
        logits = x @ w + b
        p = 1.0 / (1.0 + np.exp(-np.clip(logits, -60, 60)))
        err = p - labels
        w -= cfg.step_size * (x.T @ err) / n
        b -= cfg.step_size * float(err.mean())
    return LinearClassifierModel(
        weights=w,
        bias=b,
        feature_mean=mu,
        feature_std=sd,
        threshold=cfg.threshold,
        trained=True,
        always_benign=False,
        stats=stats,
    )


def classify(model: LinearClassifierModel, features: np.ndarray) -> tuple[float, bool]:
    """Score in [0,1] plus the detection bit (score >= threshold)."""
    if not model.trained:
        raise ValueError("classifier used before training")
    if model.always_benign:
        return 0.0, False
    xs = (features - model.feature_mean) / model.feature_std
    logit = float(xs @ model.weights + model.bias)
    score = 1.0 / (1.0 + math.exp(-max(-60.0, min(60.0, logit))))
    return score, score >= model.threshold
