"""Shared fixtures: bundled scenarios, a cached flagship run, and builders
for synthetic events/scenarios used by the unit suites.

Session-scoped fixtures hold immutable objects only (frozen dataclasses,
completed run logs); anything mutable is built per test.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np
import pytest

from sentinelsim.config import EngineConfig
from sentinelsim.events import (
    DetectorView,
    Domain,
    EntityKind,
    EntityRef,
    EventKind,
    GroundTruth,
    KIND_DOMAIN,
    TelemetryEvent,
    load_scenario,
)
from sentinelsim.sim import run, run_report

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "src" / "sentinelsim" / "scenarios"


@pytest.fixture(scope="session")
def default_spec():
    return load_scenario((SCENARIO_DIR / "default.json").read_bytes())


@pytest.fixture(scope="session")
def mini_spec():
    return load_scenario((SCENARIO_DIR / "saas_api_abuse.json").read_bytes())


@pytest.fixture(scope="session")
def cfg():
    return EngineConfig()


@pytest.fixture(scope="session")
def agentic_log(default_spec, cfg):
    """One full agentic run on the flagship scenario, shared read-only."""
    return run(default_spec, model="agentic", seed=1, cfg=cfg)


@pytest.fixture(scope="session")
def agentic_report(agentic_log, cfg):
    return run_report(agentic_log, cfg)


# ----------------------------------------------------------------------------
# Builders
# ----------------------------------------------------------------------------

def build_view(
    *,
    event_id: str = "e-test",
    ts: int = 0,
    entity_id: str = "svc-1",
    tenant: str = "t-a",
    entity_kind: EntityKind = EntityKind.Service,
    kind: EventKind = EventKind.ApiCall,
    numeric: dict | None = None,
    categorical: dict | None = None,
) -> DetectorView:
    return DetectorView(
        id=event_id,
        ts=ts,
        entity=EntityRef(kind=entity_kind, id=entity_id, tenant=tenant),
        domain=KIND_DOMAIN[kind],
        kind=kind,
        numeric={"request_rate": 10.0, "payload_bytes": 500.0} if numeric is None else numeric,
        categorical={"geo": "geo-us", "hour_of_day": "9", "device_fingerprint": "fp-1"}
        if categorical is None
        else categorical,
    )


def build_event(
    *,
    malicious: bool = False,
    required_severity: float = 0.0,
    attack_family=None,
    attack_id: str | None = None,
    **view_kwargs,
) -> TelemetryEvent:
    view = build_view(**view_kwargs)
    truth = (
        GroundTruth(
            malicious=True,
            attack_id=attack_id or "attack-test",
            attack_family=attack_family,
            required_severity=required_severity,
        )
        if malicious
        else GroundTruth(malicious=False)
    )
    return TelemetryEvent(
        id=view.id,
        ts=view.ts,
        entity=view.entity,
        domain=view.domain,
        kind=view.kind,
        numeric=view.numeric,
        categorical=view.categorical,
        truth=truth,
    )


_BASE_SCENARIO_DOC = {
    "name": "unit-fixture",
    "duration_ms": 600_000,
    "seed": 7,
    "tenants": [
        {
            "id": "t-a",
            "entities": [
                {
                    "kind": "Service",
                    "id": "svc-1",
                    "rate_per_min": 30.0,
                    "event_kinds": {"ApiCall": 0.7, "Login": 0.3},
                    "numeric": {
                        "request_rate": {"mean": 10.0, "stddev": 2.0},
                        "payload_bytes": {"mean": 500.0, "stddev": 100.0},
                    },
                    "categorical": {
                        "geo": {"geo-us": 1.0},
                        "hour_of_day": {"9": 1.0},
                        "device_fingerprint": {"fp-1": 1.0},
                        "credential_hash": {"cred-1": 1.0},
                        "endpoint_path": {"/v2/app": 1.0},
                    },
                },
            ],
        },
        {
            "id": "t-b",
            "entities": [
                {
                    "kind": "User",
                    "id": "user-1",
                    "rate_per_min": 20.0,
                    "event_kinds": {"Login": 1.0},
                    "numeric": {
                        "request_rate": {"mean": 5.0, "stddev": 1.0},
                        "payload_bytes": {"mean": 200.0, "stddev": 40.0},
                    },
                    "categorical": {
                        "geo": {"geo-de": 1.0},
                        "hour_of_day": {"10": 1.0},
                        "device_fingerprint": {"fp-2": 1.0},
                        "credential_hash": {"cred-2": 1.0},
                    },
                },
            ],
        },
    ],
    "injections": [
        {
            "family": "CredentialStuffing",
            "start_ms": 300_000,
            "end_ms": 420_000,
            "params": {
                "tenants": ["t-a", "t-b"],
                "credential_hash": "cred-stolen",
                "geo": "geo-xx",
                "rate_per_min": 10.0,
            },
        },
    ],
}


def scenario_doc() -> dict:
    """Deep copy of a minimal valid scenario document, safe to mutate."""
    return copy.deepcopy(_BASE_SCENARIO_DOC)


def scenario_text(doc: dict) -> str:
    return json.dumps(doc)


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)


# ----------------------------------------------------------------------------
# Acceptance reporting
# ----------------------------------------------------------------------------

#: (label, verdict, detail) triples registered by the acceptance suite,
#: echoed as one line per criterion after the test summary. The verdict is
#: True (PASS), False (FAIL), or None (SKIP — optional tooling absent).
ACCEPTANCE_RESULTS: list[tuple[str, bool | None, str]] = []


def record_criterion(
    label: str, passed: bool, detail: str = "", *, skipped: bool = False
) -> None:
    ACCEPTANCE_RESULTS.append((label, None if skipped else passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in ACCEPTANCE_RESULTS:
        verdict = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
        line = f"{verdict}  {label}" + (f"  [{detail}]" if detail else "")
        markup = {"yellow": True} if passed is None else (
            {"green": True} if passed else {"red": True}
        )
        terminalreporter.write_line(line, **markup)
