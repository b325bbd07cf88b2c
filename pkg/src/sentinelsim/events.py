"""Telemetry data model, scenario files, and deterministic traffic generation.

The simulation consumes a single merged, time-ordered stream of
``TelemetryEvent`` objects: benign background traffic drawn from per-entity
distributions plus scripted attack injections. Ground truth rides along on
every event but detection code only ever receives a ``DetectorView``, which
has no truth field at all — the isolation is structural, not a convention.

Determinism contract: the merged stream is a pure function of
(scenario, run_seed). Model choice never touches generation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional

import numpy as np


# ============================================================================
# Enumerations
# ============================================================================

class EntityKind(str, Enum):
    User = "User"
    Device = "Device"
    Service = "Service"
    Container = "Container"
    ApiClient = "ApiClient"


class Domain(str, Enum):
    Api = "Api"
    Endpoint = "Endpoint"
    Network = "Network"


class EventKind(str, Enum):
    ApiCall = "ApiCall"
    Login = "Login"
    FileDownload = "FileDownload"
    NetworkFlow = "NetworkFlow"
    ProcessExec = "ProcessExec"
    ConfigChange = "ConfigChange"


class AttackFamily(str, Enum):
    ApiAbuse = "ApiAbuse"
    CredentialStuffing = "CredentialStuffing"
    LateralMovement = "LateralMovement"
    ZeroDay = "ZeroDay"


#: Which decision domain handles each kind of telemetry.
KIND_DOMAIN: dict[EventKind, Domain] = {
    EventKind.ApiCall: Domain.Api,
    EventKind.Login: Domain.Api,
    EventKind.FileDownload: Domain.Endpoint,
    EventKind.ProcessExec: Domain.Endpoint,
    EventKind.ConfigChange: Domain.Endpoint,
    EventKind.NetworkFlow: Domain.Network,
}

#: Minimum action severity that counts as containing an attack of the family.
FAMILY_REQUIRED_SEVERITY: dict[AttackFamily, float] = {
    AttackFamily.ApiAbuse: 0.5,
    AttackFamily.CredentialStuffing: 0.7,
    AttackFamily.LateralMovement: 0.7,
    AttackFamily.ZeroDay: 0.5,
}

#: Numeric features carried by every event.
NUMERIC_FEATURES = ("request_rate", "payload_bytes")

#: Categorical attributes every event must carry.
REQUIRED_ATTRIBUTES = ("geo", "hour_of_day", "device_fingerprint")

#: Attributes attached only for specific event kinds.
KIND_EXTRA_ATTRIBUTES: dict[EventKind, tuple[str, ...]] = {
    EventKind.ApiCall: ("credential_hash", "endpoint_path"),
    EventKind.Login: ("credential_hash",),
    EventKind.NetworkFlow: ("peer_service",),
    EventKind.FileDownload: (),
    EventKind.ProcessExec: (),
    EventKind.ConfigChange: (),
}


# ============================================================================
# Core records
# ============================================================================

@dataclass(frozen=True)
class EntityRef:
    kind: EntityKind
    id: str
    tenant: str

    def key(self) -> str:
        return f"{self.tenant}:{self.id}"


@dataclass(frozen=True)
class GroundTruth:
    malicious: bool
    attack_id: Optional[str] = None
    attack_family: Optional[AttackFamily] = None
    required_severity: float = 0.0

    def __post_init__(self) -> None:
        if not self.malicious:
            if self.attack_id is not None or self.attack_family is not None:
                raise ValueError("benign truth must not name an attack")
            if self.required_severity != 0.0:
                raise ValueError("benign truth must have required_severity 0")


@dataclass(frozen=True)
class DetectorView:
    """What detection code is allowed to see. Deliberately has no truth."""

    id: str
    ts: int
    entity: EntityRef
    domain: Domain
    kind: EventKind
    numeric: dict[str, float]
    categorical: dict[str, str]


@dataclass(frozen=True)
class TelemetryEvent:
    id: str
    ts: int
    entity: EntityRef
    domain: Domain
    kind: EventKind
    numeric: dict[str, float]
    categorical: dict[str, str]
    truth: GroundTruth

    def view(self) -> DetectorView:
        return DetectorView(
            id=self.id,
            ts=self.ts,
            entity=self.entity,
            domain=self.domain,
            kind=self.kind,
            numeric=self.numeric,
            categorical=self.categorical,
        )


# ============================================================================
# Scenario specification
# ============================================================================

@dataclass(frozen=True)
class NumericSpec:
    mean: float
    stddev: float


@dataclass(frozen=True)
class EntitySpec:
    kind: EntityKind
    id: str
    rate_per_min: float
    event_kinds: dict[EventKind, float]
    numeric: dict[str, NumericSpec]
    categorical: dict[str, dict[str, float]]


@dataclass(frozen=True)
class TenantSpec:
    id: str
    entities: tuple[EntitySpec, ...]


@dataclass(frozen=True)
class RecurrenceSpec:
    start_ms: int
    end_ms: int
    overrides: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class AttackInjection:
    family: AttackFamily
    start_ms: int
    end_ms: int
    params: dict[str, Any]
    recurrence: Optional[RecurrenceSpec] = None


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    duration_ms: int
    seed: int
    tenants: tuple[TenantSpec, ...]
    injections: tuple[AttackInjection, ...]

    def tenant(self, tenant_id: str) -> Optional[TenantSpec]:
        for t in self.tenants:
            if t.id == tenant_id:
                return t
        return None

    def digest(self) -> str:
        return hashlib.sha256(
            canonical_json(scenario_to_dict(self)).encode("utf-8")
        ).hexdigest()


class ScenarioError(ValueError):
    """Parse failure — carries the JSON field path that broke."""


class ScenarioValidationError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ----------------------------------------------------------------------------
# Parsing. Strict: unknown keys rejected, every error names its field path.
# ----------------------------------------------------------------------------

def _expect(obj: Any, typ: type, path: str) -> Any:
    if typ is float and isinstance(obj, int) and not isinstance(obj, bool):
        return float(obj)
    if typ is int and isinstance(obj, bool):
        raise ScenarioError(f"{path}: expected int, got bool")
    if not isinstance(obj, typ):
        raise ScenarioError(f"{path}: expected {typ.__name__}, got {type(obj).__name__}")
    return obj


def _check_keys(obj: dict, allowed: set[str], required: set[str], path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"{path}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ScenarioError(f"{path}: missing field(s) {sorted(missing)}")


def _parse_enum(enum_cls: type[Enum], raw: Any, path: str) -> Enum:
    try:
        return enum_cls(raw)
    except ValueError:
        valid = [m.value for m in enum_cls]
        raise ScenarioError(f"{path}: {raw!r} is not one of {valid}") from None


def _parse_weights(raw: Any, path: str) -> dict[str, float]:
    _expect(raw, dict, path)
    out: dict[str, float] = {}
    for key, val in raw.items():
        out[str(key)] = _expect(val, float, f"{path}.{key}")
    return out


def _parse_entity(raw: Any, path: str) -> EntitySpec:
    _expect(raw, dict, path)
    _check_keys(
        raw,
        allowed={"kind", "id", "rate_per_min", "event_kinds", "numeric", "categorical"},
        required={"kind", "id", "rate_per_min", "event_kinds", "numeric", "categorical"},
        path=path,
    )
    kind = _parse_enum(EntityKind, raw["kind"], f"{path}.kind")
    event_kinds = {
        _parse_enum(EventKind, k, f"{path}.event_kinds"): _expect(v, float, f"{path}.event_kinds.{k}")
        for k, v in _expect(raw["event_kinds"], dict, f"{path}.event_kinds").items()
    }
    numeric: dict[str, NumericSpec] = {}
    for name, nv in _expect(raw["numeric"], dict, f"{path}.numeric").items():
        _expect(nv, dict, f"{path}.numeric.{name}")
        _check_keys(nv, {"mean", "stddev"}, {"mean", "stddev"}, f"{path}.numeric.{name}")
        numeric[str(name)] = NumericSpec(
            mean=_expect(nv["mean"], float, f"{path}.numeric.{name}.mean"),
            stddev=_expect(nv["stddev"], float, f"{path}.numeric.{name}.stddev"),
        )
    categorical = {
        str(attr): _parse_weights(weights, f"{path}.categorical.{attr}")
        for attr, weights in _expect(raw["categorical"], dict, f"{path}.categorical").items()
    }
    return EntitySpec(
        kind=kind,
        id=_expect(raw["id"], str, f"{path}.id"),
        rate_per_min=_expect(raw["rate_per_min"], float, f"{path}.rate_per_min"),
        event_kinds=event_kinds,
        numeric=numeric,
        categorical=categorical,
    )


def _parse_injection(raw: Any, path: str) -> AttackInjection:
    _expect(raw, dict, path)
    _check_keys(
        raw,
        allowed={"family", "start_ms", "end_ms", "params", "recurrence"},
        required={"family", "start_ms", "end_ms", "params"},
        path=path,
    )
    recurrence = None
    if raw.get("recurrence") is not None:
        rec = _expect(raw["recurrence"], dict, f"{path}.recurrence")
        _check_keys(rec, {"start_ms", "end_ms", "overrides"}, {"start_ms", "end_ms"}, f"{path}.recurrence")
        recurrence = RecurrenceSpec(
            start_ms=_expect(rec["start_ms"], int, f"{path}.recurrence.start_ms"),
            end_ms=_expect(rec["end_ms"], int, f"{path}.recurrence.end_ms"),
            overrides=dict(_expect(rec.get("overrides", {}), dict, f"{path}.recurrence.overrides")),
        )
    return AttackInjection(
        family=_parse_enum(AttackFamily, raw["family"], f"{path}.family"),
        start_ms=_expect(raw["start_ms"], int, f"{path}.start_ms"),
        end_ms=_expect(raw["end_ms"], int, f"{path}.end_ms"),
        params=dict(_expect(raw["params"], dict, f"{path}.params")),
        recurrence=recurrence,
    )


def parse_scenario(text: str) -> ScenarioSpec:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"not valid JSON: line {exc.lineno} col {exc.colno}: {exc.msg}") from None
    _expect(raw, dict, "$")
    _check_keys(
        raw,
        allowed={"name", "duration_ms", "seed", "tenants", "injections"},
        required={"duration_ms", "seed", "tenants", "injections"},
        path="$",
    )
    tenants = []
    for i, traw in enumerate(_expect(raw["tenants"], list, "$.tenants")):
        tp = f"$.tenants[{i}]"
        _expect(traw, dict, tp)
        _check_keys(traw, {"id", "entities"}, {"id", "entities"}, tp)
        entities = tuple(
            _parse_entity(e, f"{tp}.entities[{j}]")
            for j, e in enumerate(_expect(traw["entities"], list, f"{tp}.entities"))
        )
        tenants.append(TenantSpec(id=_expect(traw["id"], str, f"{tp}.id"), entities=entities))
    injections = tuple(
        _parse_injection(inj, f"$.injections[{i}]")
        for i, inj in enumerate(_expect(raw["injections"], list, "$.injections"))
    )
    return ScenarioSpec(
        name=_expect(raw.get("name", "unnamed"), str, "$.name"),
        duration_ms=_expect(raw["duration_ms"], int, "$.duration_ms"),
        seed=_expect(raw["seed"], int, "$.seed"),
        tenants=tuple(tenants),
        injections=injections,
    )


def load_scenario(source: bytes | str) -> ScenarioSpec:
    """Parse and fully validate a scenario file; any violation is fatal."""
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    spec = parse_scenario(text)
    violations = validate_scenario(spec)
    if violations:
        raise ScenarioValidationError(violations)
    return spec


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "name": spec.name,
        "duration_ms": spec.duration_ms,
        "seed": spec.seed,
        "tenants": [
            {
                "id": t.id,
                "entities": [
                    {
                        "kind": e.kind.value,
                        "id": e.id,
                        "rate_per_min": e.rate_per_min,
                        "event_kinds": {k.value: w for k, w in e.event_kinds.items()},
                        "numeric": {n: {"mean": s.mean, "stddev": s.stddev} for n, s in e.numeric.items()},
                        "categorical": e.categorical,
                    }
                    for e in t.entities
                ],
            }
            for t in spec.tenants
        ],
        "injections": [
            {
                "family": inj.family.value,
                "start_ms": inj.start_ms,
                "end_ms": inj.end_ms,
                "params": inj.params,
                "recurrence": (
                    None
                    if inj.recurrence is None
                    else {
                        "start_ms": inj.recurrence.start_ms,
                        "end_ms": inj.recurrence.end_ms,
                        "overrides": inj.recurrence.overrides,
                    }
                ),
            }
            for inj in spec.injections
        ],
    }


# ----------------------------------------------------------------------------
# Validation. Collects every violation instead of stopping at the first.
# ----------------------------------------------------------------------------

_FAMILY_REQUIRED_PARAMS: dict[AttackFamily, tuple[str, ...]] = {
    AttackFamily.ApiAbuse: ("tenant", "entity_id", "rate_multiplier"),
    AttackFamily.CredentialStuffing: ("tenants", "credential_hash", "geo"),
    AttackFamily.LateralMovement: ("tenant", "entity_id", "peer_service"),
    AttackFamily.ZeroDay: ("tenant", "entity_id", "novel_geo"),
}

_FAMILY_OPTIONAL_PARAMS: dict[AttackFamily, tuple[str, ...]] = {
    AttackFamily.ApiAbuse: ("rate_per_min", "hour_of_day"),
    AttackFamily.CredentialStuffing: (
        "rate_per_min", "device_fingerprint", "hour_of_day", "credential_count",
    ),
    AttackFamily.LateralMovement: ("rate_per_min", "payload_shift_stddevs", "hour_of_day"),
    AttackFamily.ZeroDay: ("rate_per_min", "novel_device_fingerprint", "numeric_shift_stddevs"),
}

_RECURRENCE_OVERRIDABLE = ("credential_hash", "rate_per_min", "device_fingerprint")


def _benign_values(spec: ScenarioSpec, attr: str) -> set[str]:
    values: set[str] = set()
    for tenant in spec.tenants:
        for entity in tenant.entities:
            values.update(entity.categorical.get(attr, {}))
    return values


def validate_scenario(spec: ScenarioSpec) -> list[str]:
    v: list[str] = []
    if spec.duration_ms <= 0:
        v.append("duration_ms: must be > 0")

    seen_entities: set[tuple[EntityKind, str, str]] = set()
    seen_tenants: set[str] = set()
    for ti, tenant in enumerate(spec.tenants):
        tp = f"tenants[{ti}]"
        if not tenant.id:
            v.append(f"{tp}.id: must be non-empty")
        if tenant.id in seen_tenants:
            v.append(f"{tp}.id: duplicate tenant id {tenant.id!r}")
        seen_tenants.add(tenant.id)
        for ei, entity in enumerate(tenant.entities):
            ep = f"{tp}.entities[{ei}]"
            if not entity.id:
                v.append(f"{ep}.id: must be non-empty")
            key = (entity.kind, entity.id, tenant.id)
            if key in seen_entities:
                v.append(f"{ep}: duplicate entity {entity.id!r} in tenant {tenant.id!r}")
            seen_entities.add(key)
            if entity.rate_per_min <= 0:
                v.append(f"{ep}.rate_per_min: must be > 0")
            if not entity.event_kinds:
                v.append(f"{ep}.event_kinds: must not be empty")
            for kind, weight in entity.event_kinds.items():
                if weight <= 0:
                    v.append(f"{ep}.event_kinds.{kind.value}: weight must be > 0")
            for feature in NUMERIC_FEATURES:
                if feature not in entity.numeric:
                    v.append(f"{ep}.numeric: missing {feature!r}")
            for name, ns in entity.numeric.items():
                if ns.stddev < 0:
                    v.append(f"{ep}.numeric.{name}.stddev: must be >= 0")
            for attr in REQUIRED_ATTRIBUTES:
                if attr not in entity.categorical or not entity.categorical[attr]:
                    v.append(f"{ep}.categorical: missing weights for {attr!r}")
            for attr, weights in entity.categorical.items():
                for value, weight in weights.items():
                    if weight <= 0:
                        v.append(f"{ep}.categorical.{attr}.{value}: weight must be > 0")
            for value in entity.categorical.get("hour_of_day", {}):
                try:
                    hour = int(value)
                except ValueError:
                    hour = -1
                if not 0 <= hour <= 23:
                    v.append(f"{ep}.categorical.hour_of_day: {value!r} not in 0..23")
            needed = {a for k in entity.event_kinds for a in KIND_EXTRA_ATTRIBUTES[k]}
            for attr in sorted(needed):
                if attr not in entity.categorical or not entity.categorical[attr]:
                    v.append(f"{ep}.categorical: missing weights for {attr!r} (required by event kinds)")

    benign_geo = _benign_values(spec, "geo")
    benign_fp = _benign_values(spec, "device_fingerprint")
    benign_peer = _benign_values(spec, "peer_service")

    for ii, inj in enumerate(spec.injections):
        ip = f"injections[{ii}]"
        if inj.start_ms >= inj.end_ms:
            v.append(f"{ip}: start_ms must be < end_ms")
        if inj.start_ms < 0 or inj.end_ms > spec.duration_ms:
            v.append(f"{ip}: window [{inj.start_ms}, {inj.end_ms}] outside scenario duration")
        required = _FAMILY_REQUIRED_PARAMS[inj.family]
        allowed = set(required) | set(_FAMILY_OPTIONAL_PARAMS[inj.family])
        for param in required:
            if param not in inj.params:
                v.append(f"{ip}.params.{param}: required for {inj.family.value}")
        for param in inj.params:
            if param not in allowed:
                v.append(f"{ip}.params.{param}: unknown for {inj.family.value}")
        rate = inj.params.get("rate_per_min")
        if rate is not None and (not isinstance(rate, (int, float)) or rate <= 0):
            v.append(f"{ip}.params.rate_per_min: must be > 0")
        hour = inj.params.get("hour_of_day")
        if hour is not None and (not isinstance(hour, int) or not 0 <= hour <= 23):
            v.append(f"{ip}.params.hour_of_day: must be an int in 0..23")

        if inj.family is AttackFamily.ApiAbuse:
            mult = inj.params.get("rate_multiplier")
            if mult is not None and (not isinstance(mult, (int, float)) or mult <= 1):
                v.append(f"{ip}.params.rate_multiplier: must be > 1")
            v.extend(_check_target(spec, inj.params, ip))
        elif inj.family is AttackFamily.CredentialStuffing:
            tenants = inj.params.get("tenants")
            if not isinstance(tenants, list) or len(set(tenants)) < 2:
                v.append(f"{ip}.params.tenants: needs >= 2 distinct tenants")
            else:
                for t in tenants:
                    if spec.tenant(t) is None:
                        v.append(f"{ip}.params.tenants: unknown tenant {t!r}")
            count = inj.params.get("credential_count")
            if count is not None and (not isinstance(count, int) or count < 1):
                v.append(f"{ip}.params.credential_count: must be an int >= 1")
        elif inj.family is AttackFamily.LateralMovement:
            v.extend(_check_target(spec, inj.params, ip))
            peer = inj.params.get("peer_service")
            if isinstance(peer, str) and peer in benign_peer:
                v.append(f"{ip}.params.peer_service: {peer!r} appears in benign preferences")
        elif inj.family is AttackFamily.ZeroDay:
            v.extend(_check_target(spec, inj.params, ip))
            geo = inj.params.get("novel_geo")
            if isinstance(geo, str) and geo in benign_geo:
                v.append(f"{ip}.params.novel_geo: {geo!r} appears in benign preferences")
            fp = inj.params.get("novel_device_fingerprint")
            if isinstance(fp, str) and fp in benign_fp:
                v.append(f"{ip}.params.novel_device_fingerprint: {fp!r} appears in benign preferences")
            shift = inj.params.get("numeric_shift_stddevs", 4.0)
            if not isinstance(shift, (int, float)) or shift < 4.0:
                v.append(f"{ip}.params.numeric_shift_stddevs: must be >= 4")

        if inj.recurrence is not None:
            rec = inj.recurrence
            rp = f"{ip}.recurrence"
            if rec.start_ms >= rec.end_ms:
                v.append(f"{rp}: start_ms must be < end_ms")
            if rec.start_ms < inj.end_ms:
                v.append(f"{rp}: must start after the primary window ends")
            if rec.end_ms > spec.duration_ms:
                v.append(f"{rp}: window extends past scenario duration")
            for key in rec.overrides:
                if key not in _RECURRENCE_OVERRIDABLE:
                    v.append(f"{rp}.overrides.{key}: only {list(_RECURRENCE_OVERRIDABLE)} may change on recurrence")
    return v


def _check_target(spec: ScenarioSpec, params: dict, path: str) -> list[str]:
    out = []
    tenant_id = params.get("tenant")
    tenant = spec.tenant(tenant_id) if isinstance(tenant_id, str) else None
    if tenant is None:
        out.append(f"{path}.params.tenant: unknown tenant {tenant_id!r}")
        return out
    entity_id = params.get("entity_id")
    if entity_id is not None and all(e.id != entity_id for e in tenant.entities):
        out.append(f"{path}.params.entity_id: unknown entity {entity_id!r} in tenant {tenant_id!r}")
    return out


# ============================================================================
# Generation
# ============================================================================

@dataclass
class _PendingEvent:
    """Pre-merge event: carries its source stream order for tie-breaking."""
    ts: int
    entity: EntityRef
    kind: EventKind
    numeric: dict[str, float]
    categorical: dict[str, str]
    truth: GroundTruth
    seq: int


class BenignGenerator:
    """Per-tenant benign traffic source.

    Entity arrival processes are independent exponentials, so the tenant
    stream is their superposition. State is single-owner; `next_event`
    advances exactly one entity's clock.
    """

    def __init__(self, tenant: TenantSpec, rng: np.random.Generator):
        self.tenant = tenant
        self.rng = rng
        self._seq = 0
        self._next_ts: dict[str, float] = {}
        for entity in tenant.entities:
            self._next_ts[entity.id] = self._gap(entity)

    def _gap(self, entity: EntitySpec) -> float:
        return self.rng.exponential(60_000.0 / entity.rate_per_min)

    def peek_ts(self) -> float:
        return min(self._next_ts.values())

    def next_event(self) -> _PendingEvent:
        entity_id = min(self._next_ts, key=lambda eid: (self._next_ts[eid], eid))
        entity = next(e for e in self.tenant.entities if e.id == entity_id)
        ts = self._next_ts[entity_id]
        self._next_ts[entity_id] = ts + self._gap(entity)
        kind = _weighted_choice(self.rng, entity.event_kinds)
        numeric = {
            name: max(0.0, float(self.rng.normal(ns.mean, ns.stddev)))
            for name, ns in entity.numeric.items()
        }
        categorical = {}
        for attr in REQUIRED_ATTRIBUTES + KIND_EXTRA_ATTRIBUTES[kind]:
            categorical[attr] = _weighted_choice(self.rng, entity.categorical[attr])
        self._seq += 1
        return _PendingEvent(
            ts=int(round(ts)),
            entity=EntityRef(kind=entity.kind, id=entity.id, tenant=self.tenant.id),
            kind=kind,
            numeric=numeric,
            categorical=categorical,
            truth=GroundTruth(malicious=False),
            seq=self._seq,
        )


def _weighted_choice(rng: np.random.Generator, weights: dict) -> Any:
    keys = list(weights.keys())
    w = np.asarray([weights[k] for k in keys], dtype=float)
    idx = int(rng.choice(len(keys), p=w / w.sum()))
    return keys[idx]


def _arrival_times(rng: np.random.Generator, start_ms: int, end_ms: int, rate_per_min: float) -> list[int]:
    """Poisson arrivals in [start, end); guaranteed non-empty."""
    times: list[int] = []
    t = float(start_ms)
    mean_gap = 60_000.0 / rate_per_min
    while True:
        t += rng.exponential(mean_gap)
        if t >= end_ms:
            break
        times.append(int(round(t)))
    if not times:
        times.append(start_ms)
    return times


def inject_attack_events(
    injection: AttackInjection,
    spec: ScenarioSpec,
    rng: np.random.Generator,
    attack_id: str,
) -> list[_PendingEvent]:
    """Expand one injection (and its recurrence window) into events."""
    windows: list[tuple[int, int, dict[str, Any]]] = [
        (injection.start_ms, injection.end_ms, injection.params)
    ]
    if injection.recurrence is not None:
        merged = dict(injection.params)
        merged.update(injection.recurrence.overrides)
        windows.append((injection.recurrence.start_ms, injection.recurrence.end_ms, merged))

    truth = GroundTruth(
        malicious=True,
        attack_id=attack_id,
        attack_family=injection.family,
        required_severity=FAMILY_REQUIRED_SEVERITY[injection.family],
    )
    make = {
        AttackFamily.ApiAbuse: _gen_api_abuse,
        AttackFamily.CredentialStuffing: _gen_credential_stuffing,
        AttackFamily.LateralMovement: _gen_lateral_movement,
        AttackFamily.ZeroDay: _gen_zero_day,
    }[injection.family]

    events: list[_PendingEvent] = []
    seq = 0
    for start, end, params in windows:
        for pending in make(spec, params, start, end, rng, truth):
            seq += 1
            pending.seq = seq
            events.append(pending)
    return events


def _entity_spec(spec: ScenarioSpec, tenant_id: str, entity_id: str) -> tuple[TenantSpec, EntitySpec]:
    tenant = spec.tenant(tenant_id)
    if tenant is None:
        raise ValueError(f"unvalidated injection: unknown tenant {tenant_id!r}")
    for entity in tenant.entities:
        if entity.id == entity_id:
            return tenant, entity
    raise ValueError(f"unvalidated injection: unknown entity {entity_id!r}")


def _base_categorical(rng: np.random.Generator, entity: EntitySpec, kind: EventKind) -> dict[str, str]:
    out = {}
    for attr in REQUIRED_ATTRIBUTES + KIND_EXTRA_ATTRIBUTES[kind]:
        if attr in entity.categorical and entity.categorical[attr]:
            out[attr] = _weighted_choice(rng, entity.categorical[attr])
    return out


def _gen_api_abuse(spec, params, start, end, rng, truth):
    tenant, entity = _entity_spec(spec, params["tenant"], params["entity_id"])
    mult = float(params["rate_multiplier"])
    ref = EntityRef(kind=entity.kind, id=entity.id, tenant=tenant.id)
    for ts in _arrival_times(rng, start, end, float(params.get("rate_per_min", 20))):
        numeric = {
            name: max(0.0, float(rng.normal(ns.mean, ns.stddev))) * mult
            for name, ns in entity.numeric.items()
        }
        categorical = _base_categorical(rng, entity, EventKind.ApiCall)
        if "hour_of_day" in params:
            categorical["hour_of_day"] = str(params["hour_of_day"])
        yield _PendingEvent(
            ts=ts, entity=ref, kind=EventKind.ApiCall, numeric=numeric,
            categorical=categorical, truth=truth, seq=0,
        )


def _gen_credential_stuffing(spec, params, start, end, rng, truth):
    victims: list[tuple[TenantSpec, EntitySpec]] = []
    for tenant_id in params["tenants"]:
        tenant = spec.tenant(tenant_id)
        if tenant is None:
            raise ValueError(f"unvalidated injection: unknown tenant {tenant_id!r}")
        victims.extend((tenant, e) for e in tenant.entities)
    fp = params.get("device_fingerprint", "fp-stuffer")
    # A stuffing campaign replays a stolen credential *list*; the campaign's
    # credential_hash names the list and each event presents one entry.
    count = int(params.get("credential_count", 1))
    base = params["credential_hash"]
    creds = [base] if count == 1 else [f"{base}-{i + 1}" for i in range(count)]
    for ts in _arrival_times(rng, start, end, float(params.get("rate_per_min", 25))):
        tenant, entity = victims[int(rng.integers(len(victims)))]
        numeric = {
            name: max(0.0, float(rng.normal(ns.mean, ns.stddev)))
            for name, ns in entity.numeric.items()
        }
        categorical = {
            "geo": params["geo"],
            "device_fingerprint": fp,
            "credential_hash": creds[int(rng.integers(len(creds)))],
            "hour_of_day": str(params["hour_of_day"]) if "hour_of_day" in params
            else _weighted_choice(rng, entity.categorical["hour_of_day"]),
        }
        yield _PendingEvent(
            ts=ts, entity=EntityRef(kind=entity.kind, id=entity.id, tenant=tenant.id),
            kind=EventKind.Login, numeric=numeric, categorical=categorical,
            truth=truth, seq=0,
        )


def _gen_lateral_movement(spec, params, start, end, rng, truth):
    tenant, entity = _entity_spec(spec, params["tenant"], params["entity_id"])
    ref = EntityRef(kind=entity.kind, id=entity.id, tenant=tenant.id)
    shift = float(params.get("payload_shift_stddevs", 3.0))
    for ts in _arrival_times(rng, start, end, float(params.get("rate_per_min", 30))):
        numeric = {}
        for name, ns in entity.numeric.items():
            value = float(rng.normal(ns.mean, ns.stddev))
            if name == "payload_bytes":
                value += shift * ns.stddev
            numeric[name] = max(0.0, value)
        categorical = _base_categorical(rng, entity, EventKind.NetworkFlow)
        categorical["peer_service"] = params["peer_service"]
        if "hour_of_day" in params:
            categorical["hour_of_day"] = str(params["hour_of_day"])
        yield _PendingEvent(
            ts=ts, entity=ref, kind=EventKind.NetworkFlow, numeric=numeric,
            categorical=categorical, truth=truth, seq=0,
        )


def _gen_zero_day(spec, params, start, end, rng, truth):
    # Novel attribute values plus a *downward* numeric shift: the point is an
    # attack that crosses no fixed upper threshold and matches no signature,
    # detectable only against the entity's own baseline.
    tenant, entity = _entity_spec(spec, params["tenant"], params["entity_id"])
    ref = EntityRef(kind=entity.kind, id=entity.id, tenant=tenant.id)
    shift = float(params.get("numeric_shift_stddevs", 4.0))
    fp = params.get("novel_device_fingerprint", f"fp-novel-{params['novel_geo']}")
    for ts in _arrival_times(rng, start, end, float(params.get("rate_per_min", 30))):
        numeric = {
            name: max(0.0, float(rng.normal(ns.mean, ns.stddev)) - shift * ns.stddev)
            for name, ns in entity.numeric.items()
        }
        categorical = _base_categorical(rng, entity, EventKind.ProcessExec)
        categorical["geo"] = params["novel_geo"]
        categorical["device_fingerprint"] = fp
        yield _PendingEvent(
            ts=ts, entity=ref, kind=EventKind.ProcessExec, numeric=numeric,
            categorical=categorical, truth=truth, seq=0,
        )


# ----------------------------------------------------------------------------
# Stream assembly
# ----------------------------------------------------------------------------

def generate_stream(spec: ScenarioSpec, run_seed: int) -> list[TelemetryEvent]:
    """Produce the merged, globally ordered event stream for one run.

    Seeded by (scenario seed, run seed) only — never by model — so every
    model sees byte-identical input.
    """
    root = np.random.SeedSequence([spec.seed & 0xFFFFFFFFFFFFFFFF, run_seed & 0xFFFFFFFFFFFFFFFF])
    children = root.spawn(len(spec.tenants) + len(spec.injections))

    pending: list[_PendingEvent] = []
    for i, tenant in enumerate(spec.tenants):
        gen = BenignGenerator(tenant, np.random.default_rng(children[i]))
        while gen.peek_ts() < spec.duration_ms:
            ev = gen.next_event()
            if ev.ts < spec.duration_ms:
                pending.append(ev)
    for j, injection in enumerate(spec.injections):
        rng = np.random.default_rng(children[len(spec.tenants) + j])
        attack_id = f"{injection.family.value.lower()}-{j}"
        pending.extend(inject_attack_events(injection, spec, rng, attack_id))

    pending.sort(key=lambda e: (e.ts, e.entity.tenant, e.entity.id, e.seq))
    events = []
    for n, ev in enumerate(pending):
        events.append(
            TelemetryEvent(
                id=f"e-{n:08d}",
                ts=ev.ts,
                entity=ev.entity,
                domain=KIND_DOMAIN[ev.kind],
                kind=ev.kind,
                numeric=ev.numeric,
                categorical=ev.categorical,
                truth=ev.truth,
            )
        )
    return events


def stream_digest(events: Iterable[TelemetryEvent]) -> str:
    h = hashlib.sha256()
    for event in events:
        h.update(event_to_json(event, include_truth=True).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


# ----------------------------------------------------------------------------
# NDJSON export / import
# ----------------------------------------------------------------------------

def event_to_json(event: TelemetryEvent, include_truth: bool) -> str:
    doc: dict[str, Any] = {
        "id": event.id,
        "ts": event.ts,
        "entity": {"kind": event.entity.kind.value, "id": event.entity.id, "tenant": event.entity.tenant},
        "domain": event.domain.value,
        "kind": event.kind.value,
        "numeric": {k: round(v, 6) for k, v in sorted(event.numeric.items())},
        "categorical": dict(sorted(event.categorical.items())),
    }
    if include_truth:
        doc["truth"] = {
            "malicious": event.truth.malicious,
            "attack_id": event.truth.attack_id,
            "attack_family": event.truth.attack_family.value if event.truth.attack_family else None,
            "required_severity": event.truth.required_severity,
        }
    return canonical_json(doc)


def event_from_json(line: str) -> TelemetryEvent:
    doc = json.loads(line)
    truth_doc = doc.get("truth")
    if truth_doc is None:
        truth = GroundTruth(malicious=False)
    else:
        truth = GroundTruth(
            malicious=truth_doc["malicious"],
            attack_id=truth_doc.get("attack_id"),
            attack_family=AttackFamily(truth_doc["attack_family"]) if truth_doc.get("attack_family") else None,
            required_severity=truth_doc.get("required_severity", 0.0),
        )
    return TelemetryEvent(
        id=doc["id"],
        ts=doc["ts"],
        entity=EntityRef(kind=EntityKind(doc["entity"]["kind"]), id=doc["entity"]["id"], tenant=doc["entity"]["tenant"]),
        domain=Domain(doc["domain"]),
        kind=EventKind(doc["kind"]),
        numeric=dict(doc["numeric"]),
        categorical=dict(doc["categorical"]),
        truth=truth,
    )


def export_ndjson(events: Iterable[TelemetryEvent], include_truth: bool) -> str:
    return "".join(event_to_json(e, include_truth) + "\n" for e in events)


# ----------------------------------------------------------------------------
# Profile scaling (desk scale <-> long-horizon)
# ----------------------------------------------------------------------------

def scale_scenario(spec: ScenarioSpec, factor: int) -> ScenarioSpec:
    """Stretch the timeline by `factor`, thinning rates to keep event counts.

    The desk-scale default compresses a multi-day story into two virtual
    hours; scaling by 36 recovers the 72-hour horizon with identical logic.
    Engine time constants (TTLs, cadences) are deliberately left alone.
    """
    if factor < 1:
        raise ValueError("scale factor must be >= 1")

    def scale_entity(e: EntitySpec) -> EntitySpec:
        return EntitySpec(
            kind=e.kind, id=e.id, rate_per_min=e.rate_per_min / factor,
            event_kinds=e.event_kinds, numeric=e.numeric, categorical=e.categorical,
        )

    def scale_injection(inj: AttackInjection) -> AttackInjection:
        params = dict(inj.params)
        if "rate_per_min" in params:
            params["rate_per_min"] = params["rate_per_min"] / factor
        rec = inj.recurrence
        if rec is not None:
            overrides = dict(rec.overrides)
            if "rate_per_min" in overrides:
                overrides["rate_per_min"] = overrides["rate_per_min"] / factor
            rec = RecurrenceSpec(rec.start_ms * factor, rec.end_ms * factor, overrides)
        return AttackInjection(
            family=inj.family, start_ms=inj.start_ms * factor, end_ms=inj.end_ms * factor,
            params=params, recurrence=rec,
        )

    return ScenarioSpec(
        name=f"{spec.name}-x{factor}",
        duration_ms=spec.duration_ms * factor,
        seed=spec.seed,
        tenants=tuple(TenantSpec(t.id, tuple(scale_entity(e) for e in t.entities)) for t in spec.tenants),
        injections=tuple(scale_injection(i) for i in spec.injections),
    )
