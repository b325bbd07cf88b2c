"""Central configuration for the simulation engine.

Every tunable constant lives here so that a run is fully described by
(scenario, model, seed, config). The defaults are the documented
desk-scale values; anything latency-related is a *model parameter*, not a
measurement (see ``LatencyConfig``).
"""

from dataclasses import dataclass, field, replace


class ConfigError(ValueError):
    """Raised at startup when a configuration block is inconsistent."""


@dataclass(frozen=True)
class ProfilingConfig:
    decay: float = 0.05            # EW update weight per observation
    maturity_threshold: int = 20   # events before a profile stands on its own
    variance_floor: float = 1e-6   # guards the z-score denominator
    z_midpoint: float = 3.0        # logistic centre: 3 sigma scores 0.5
    laplace_alpha: float = 1.0
    top_k: int = 3                 # combiner averages the top-k feature scores
    warmup_ms: int = 8 * 60_000    # observe-only while baselines are established


@dataclass(frozen=True)
class TrustConfig:
    initial_trust: float = 0.6
    learning_rate: float = 0.05    # eta: pull toward the per-event target
    intel_weight: float = 0.5      # beta: intel correlation discount in the target
    baseline_floor: float = 0.3    # b0
    sensitivity_offsets: tuple[float, float, float] = (0.0, 0.1, 0.25)  # Low/Medium/High
    threat_coefficient: float = 0.15
    baseline_cap: float = 0.9
    penalty_factor: float = 0.5    # trust *= 1 - factor * action severity
    penalty_min_risk: float = 0.5  # penalties need risk-driven (not escalated) mitigations


@dataclass(frozen=True)
class FusionConfig:
    """Risk fusion weights. Must sum to 1 (checked at startup)."""

    anomaly_weight: float = 0.5
    trust_weight: float = 0.3
    intel_weight: float = 0.2

    def validate(self) -> None:
        total = self.anomaly_weight + self.trust_weight + self.intel_weight
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"risk fusion weights sum to {total}, expected 1.0")


@dataclass(frozen=True)
class IntelConfig:
    record_min_risk: float = 0.7      # only confirmed-suspicious decisions seed indicators
    record_min_severity: float = 0.5
    confidence_divisor: int = 5       # confidence = min(1, local_count / divisor)
    publish_min_count: int = 2
    publish_cadence_ms: int = 5 * 60_000
    promotion_k: int = 2              # distinct nodes before a global entry is actionable
    ttl_ms: int = 60 * 60_000
    salt: str = "sentinelsim"         # per-deployment hashing salt
    suspicious_min_score: float = 0.5  # attribute must look anomalous before it is shared


@dataclass(frozen=True)
class AgentConfig:
    learning_rate: float = 0.1        # alpha for the action-value update
    q_min: float = -2.0
    q_max: float = 2.0
    epsilon_start: float = 0.10
    epsilon_end: float = 0.02
    memory_size: int = 256
    review_min_risk: float = 0.85     # PendingReview gate (with a reviewer attached)
    review_min_severity: float = 0.9
    review_timeout_ms: int = 120_000
    disclosure_delay_ms: int = 60_000  # ground truth reaches the learner this late
    endorse_target: float = 0.5       # operator-endorsed override credit


@dataclass(frozen=True)
class RewardConfig:
    contained: float = 1.0            # malicious, severity >= required
    under_mitigated: float = -1.0     # malicious, severity below required
    benign_allow: float = 0.2
    false_positive_cost: float = -2.0  # scaled by action severity


@dataclass(frozen=True)
class PolicyConfig:
    synthesis_window_ms: int = 30 * 60_000
    min_support: int = 3              # distinct entities backing a learned rule
    observe_min_risk: float = 0.7
    observe_min_severity: float = 0.5
    learned_ttl_ms: int = 120 * 60_000
    pause_duration_ms: int = 10 * 60_000
    throttle_duration_ms: int = 10 * 60_000
    synthesis_cadence_ms: int = 60_000
    revoke_min_risk: float = 0.7      # credential revocation persists only on high-risk calls
    revocation_duration_ms: int = 10 * 60_000  # auto-deny window until the owner rotates the token


@dataclass(frozen=True)
class LatencyConfig:
    """Virtual per-decision hop costs in ms.

    These are model parameters chosen to match the evaluated deployment
    styles (local agent vs centralized classifier vs pushed rule update);
    the meaningful claim downstream is the ordering, not the absolute
    values.
    """

    agent_inference: float = 220.0
    ml_network_rtt: float = 150.0
    ml_queue_delay: float = 200.0
    ml_inference: float = 190.0
    static_rule_distribution: float = 750.0
    rule_short_circuit: float = 20.0
    jitter: float = 0.05              # +/- fraction applied per hop

    def agent_hops(self) -> tuple[float, ...]:
        return (self.agent_inference,)

    def ml_hops(self) -> tuple[float, ...]:
        return (self.ml_network_rtt, self.ml_queue_delay, self.ml_inference)

    def static_hops(self) -> tuple[float, ...]:
        return (self.static_rule_distribution,)

    def short_circuit_hops(self) -> tuple[float, ...]:
        return (self.rule_short_circuit,)


@dataclass(frozen=True)
class BaselineConfig:
    train_fraction: float = 0.2
    epochs: int = 500
    step_size: float = 0.1
    threshold: float = 0.5            # tau on the sigmoid score
    threshold_sigma: float = 3.0      # static rule: feature > mean + k*sigma
    burst_window_ms: int = 60_000     # login burst feature lookback


@dataclass(frozen=True)
class EngineConfig:
    profiling: ProfilingConfig = field(default_factory=ProfilingConfig)
    trust: TrustConfig = field(default_factory=TrustConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    intel: IntelConfig = field(default_factory=IntelConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    latency: LatencyConfig = field(default_factory=LatencyConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    detection_min_severity: float = 0.2  # Alert or stronger counts as a detection

    def __post_init__(self) -> None:
        self.fusion.validate()


def default_config() -> EngineConfig:
    return EngineConfig()


def exact_latency_config() -> LatencyConfig:
    """Latency model without jitter, for composition/determinism checks."""
    return replace(LatencyConfig(), jitter=0.0)
