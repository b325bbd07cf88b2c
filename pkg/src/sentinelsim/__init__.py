"""sentinelsim — deterministic simulation of an adaptive, agent-based
security architecture, evaluated head-to-head against a static rule engine
and a batch-trained classifier on identical replayable telemetry.

Typical use:

    from sentinelsim import load_scenario, run, comparison_report

    spec = load_scenario(Path("scenario.json").read_text())
    logs = [run(spec, model, seed) for model in ("static", "ml", "agentic")
            for seed in range(1, 6)]
    report = comparison_report(logs, EngineConfig())
"""

from .agents import (
    ACTION_SEVERITY,
    DOMAIN_ACTIONS,
    AgentState,
    ContextBucket,
    Decision,
    DecisionStatus,
    FeedbackRecord,
    MitigationAction,
    RiskBand,
    fuse_risk,
    risk_band,
)
from .config import (
    AgentConfig,
    BaselineConfig,
    ConfigError,
    EngineConfig,
    FusionConfig,
    IntelConfig,
    LatencyConfig,
    PolicyConfig,
    ProfilingConfig,
    RewardConfig,
    TrustConfig,
    default_config,
)
from .events import (
    AttackFamily,
    DetectorView,
    Domain,
    EntityKind,
    EntityRef,
    EventKind,
    GroundTruth,
    ScenarioError,
    ScenarioSpec,
    ScenarioValidationError,
    TelemetryEvent,
    generate_stream,
    load_scenario,
    parse_scenario,
    scale_scenario,
    stream_digest,
    validate_scenario,
)
from .gateway import GatewayService, main
from .sim import (
    MODELS,
    RunLog,
    Simulation,
    adaptability,
    comparison_report,
    confusion,
    latency_stats,
    per_family_recall,
    prf,
    run,
    run_report,
    write_run_dir,
)

__version__ = "0.1.0"

__all__ = [
    "ACTION_SEVERITY",
    "DOMAIN_ACTIONS",
    "MODELS",
    "AgentConfig",
    "AgentState",
    "AttackFamily",
    "BaselineConfig",
    "ConfigError",
    "ContextBucket",
    "Decision",
    "DecisionStatus",
    "DetectorView",
    "Domain",
    "EngineConfig",
    "EntityKind",
    "EntityRef",
    "EventKind",
    "FeedbackRecord",
    "FusionConfig",
    "GatewayService",
    "GroundTruth",
    "IntelConfig",
    "LatencyConfig",
    "MitigationAction",
    "PolicyConfig",
    "ProfilingConfig",
    "RewardConfig",
    "RiskBand",
    "RunLog",
    "ScenarioError",
    "ScenarioSpec",
    "ScenarioValidationError",
    "Simulation",
    "TelemetryEvent",
    "TrustConfig",
    "adaptability",
    "comparison_report",
    "confusion",
    "default_config",
    "fuse_risk",
    "generate_stream",
    "latency_stats",
    "load_scenario",
    "main",
    "parse_scenario",
    "per_family_recall",
    "prf",
    "risk_band",
    "run",
    "run_report",
    "scale_scenario",
    "stream_digest",
    "validate_scenario",
    "write_run_dir",
]
