#!/usr/bin/env python3
"""Capture real gateway payloads as fixtures for the dashboard test suite.

Run from the repository root with the simulation package installed:

    python3 frontend/scripts/capture_fixtures.py

Every file under frontend/test/fixtures/ is a byte-for-byte record of a
live service response (or a batch-run artifact) from the bundled mini
scenario, agentic model, seed 1. The dashboard tests replay these
captures through a scripted in-process server, so `npm test` needs no
Python. Re-run this script whenever the wire formats change.

The script verifies each capture as it goes (value-table deltas, override
enforcement timing) and refuses to write fixtures that do not match the
service's own arithmetic.
"""
from __future__ import annotations

import json
import shutil
import time
from http.client import HTTPConnection
from importlib import resources
from pathlib import Path

from sentinelsim.config import EngineConfig
from sentinelsim.events import load_scenario
from sentinelsim.gateway import GatewayService
from sentinelsim.sim import run, write_run_dir

FIXTURES = Path(__file__).resolve().parents[1] / "test" / "fixtures"
# Wire payloads round learned values to 6 decimals; an alpha-step check on
# two rounded endpoints can be off by ~1e-6 at worst.
ROUND_TOL = 2e-6


def http(port: int, method: str, path: str, body: dict | None = None) -> tuple[int, bytes]:
    conn = HTTPConnection("127.0.0.1", port, timeout=15)
    payload = None if body is None else json.dumps(body).encode("utf-8")
    headers = {"Content-Type": "application/json"} if payload else {}
    conn.request(method, path, body=payload, headers=headers)
    resp = conn.getresponse()
    raw = resp.read()
    status = resp.status
    conn.close()
    return status, raw


def save(name: str, raw: bytes) -> None:
    (FIXTURES / name).write_bytes(raw)
    print(f"  wrote {name} ({len(raw)} bytes)")


def read_stream_until_run_complete(port: int) -> list[bytes]:
    conn = HTTPConnection("127.0.0.1", port, timeout=15)
    conn.request("GET", "/v1/events/stream?from_seq=0")
    resp = conn.getresponse()
    lines: list[bytes] = []
    for _ in range(100_000):
        line = resp.readline()
        if not line:
            break
        doc = json.loads(line)
        if doc.get("kind") == "Heartbeat":
            continue
        lines.append(line)
        if doc.get("kind") == "RunComplete":
            break
    conn.close()
    return lines


def bucket_table(agents: list[dict], tenant: str, domain: str, bucket: str) -> dict:
    for agent in agents:
        if agent["tenant"] == tenant and agent["domain"] == domain:
            return agent["buckets"][bucket]
    raise KeyError(f"no agent for {tenant}/{domain}")


def capture_runlog(spec, cfg) -> None:
    print("runlog artifacts:")
    out = FIXTURES / "runlog"
    if out.exists():
        shutil.rmtree(out)
    log = run(spec, "agentic", 1, cfg)
    write_run_dir(log, out, cfg)
    for path in sorted(out.iterdir()):
        print(f"  wrote runlog/{path.name} ({path.stat().st_size} bytes)")


def capture_finished_service(spec, cfg) -> None:
    print("finished-run service captures:")
    svc = GatewayService(spec, model="agentic", seed=1, cfg=cfg, speed=0.0)
    svc.start()
    try:
        svc.start_run()
        svc.join_run(120)
        assert svc.run_state == "finished", svc.run_state
        port = svc.port

        stream_lines = read_stream_until_run_complete(port)
        save("stream.ndjson", b"".join(stream_lines))

        status, raw = http(port, "GET", "/v1/decisions?limit=400")
        assert status == 200
        save("decisions.json", raw)
        decisions = json.loads(raw)["decisions"]

        status, raw = http(port, "GET", "/v1/agents")
        assert status == 200
        save("agents_before.json", raw)
        agents_before = json.loads(raw)["agents"]

        for name, path in [
            ("metrics.json", "/v1/metrics"),
            ("policies.json", "/v1/policies"),
            ("timeline.json", "/v1/policies/timeline"),
        ]:
            status, raw = http(port, "GET", path)
            assert status == 200, (path, status)
            save(name, raw)

        first = decisions[0]
        trust_key = f"{first['entity']['tenant']}:{first['entity']['id']}"
        status, raw = http(port, "GET", f"/v1/trust/{trust_key}")
        assert status == 200
        save("trust.json", raw)

        alpha = cfg.agent.learning_rate
        endorse_target = cfg.agent.endorse_target

        # --- score-only feedback: q moves by alpha * (score - q) ---------
        score_target = next(
            d for d in reversed(decisions)
            if d["status"] == "Autonomous" and d["path"] == "agent"
        )
        score = -1.0
        q_before = bucket_table(
            agents_before, score_target["entity"]["tenant"], score_target["domain"],
            score_target["bucket"],
        )[score_target["action"]]

        status, raw = http(
            port, "POST", f"/v1/decisions/{score_target['id']}/feedback", {"score": score}
        )
        assert status == 200, raw
        assert json.loads(raw)["status"] == "applied"
        save("feedback_score_response.json", raw)

        status, raw = http(port, "GET", "/v1/agents")
        save("agents_after_score.json", raw)
        agents_after_score = json.loads(raw)["agents"]
        q_after = bucket_table(
            agents_after_score, score_target["entity"]["tenant"], score_target["domain"],
            score_target["bucket"],
        )[score_target["action"]]
        expected = q_before + alpha * (score - q_before)
        assert abs(q_after - expected) < ROUND_TOL, (q_before, q_after, expected)

        # --- override feedback: original punished, replacement endorsed --
        override_target = next(
            d for d in reversed(decisions)
            if d["status"] == "Autonomous" and d["path"] == "agent"
            and d["action"] == "Allow" and d["id"] != score_target["id"]
        )
        override = "Throttle"
        table = bucket_table(
            agents_after_score, override_target["entity"]["tenant"],
            override_target["domain"], override_target["bucket"],
        )
        q_orig, q_repl = table["Allow"], table[override]

        status, raw = http(
            port, "POST", f"/v1/decisions/{override_target['id']}/feedback",
            {"score": score, "override": override},
        )
        assert status == 200, raw
        body = json.loads(raw)
        assert body["status"] == "applied" and body["action"] == override
        assert body["decision_status"] == "Overridden"
        save("feedback_override_response.json", raw)

        status, raw = http(port, "GET", "/v1/agents")
        save("agents_after_override.json", raw)
        table_after = bucket_table(
            json.loads(raw)["agents"], override_target["entity"]["tenant"],
            override_target["domain"], override_target["bucket"],
        )
        assert abs(table_after["Allow"] - (q_orig + alpha * (score - q_orig))) < ROUND_TOL
        assert abs(table_after[override] - (q_repl + alpha * (endorse_target - q_repl))) < ROUND_TOL

        status, raw = http(port, "GET", "/v1/decisions?limit=400")
        save("decisions_after.json", raw)
        refreshed = json.loads(raw)["decisions"]
        flipped = next(d for d in refreshed if d["id"] == override_target["id"])
        assert flipped["status"] == "Overridden" and flipped["action"] == override

        save("roundtrip.json", (json.dumps({
            "alpha": alpha,
            "endorse_target": endorse_target,
            "score_case": {
                "decision_id": score_target["id"],
                "tenant": score_target["entity"]["tenant"],
                "domain": score_target["domain"],
                "bucket": score_target["bucket"],
                "action": score_target["action"],
                "score": score,
            },
            "override_case": {
                "decision_id": override_target["id"],
                "tenant": override_target["entity"]["tenant"],
                "domain": override_target["domain"],
                "bucket": override_target["bucket"],
                "action": override_target["action"],
                "override": override,
                "score": score,
            },
        }, indent=2) + "\n").encode("utf-8"))

        # --- error bodies, surfaced verbatim by the dashboard ------------
        errors = {}
        for name, method, path, body in [
            ("trust_404", "GET", "/v1/trust/none:missing", None),
            ("feedback_unknown_404", "POST", "/v1/decisions/d-99999/feedback", {"score": 1.0}),
            ("feedback_bad_override_400", "POST",
             f"/v1/decisions/{score_target['id']}/feedback",
             {"score": 1.0, "override": "QuarantineContainer"}),
            ("feedback_bad_score_400", "POST",
             f"/v1/decisions/{score_target['id']}/feedback", {"score": "high"}),
        ]:
            status, raw = http(port, method, path, body)
            assert status in (400, 404), (name, status)
            errors[name] = {"status": status, "body": raw.decode("utf-8")}
        save("errors.json", (json.dumps(errors, indent=2) + "\n").encode("utf-8"))
    finally:
        svc.shutdown()


def capture_live_boundary(spec, cfg) -> None:
    """Override a decision while the run is live and record that it is in
    force by the time at most one further event has been processed."""
    print("live-run boundary captures:")
    svc = GatewayService(spec, model="agentic", seed=1, cfg=cfg, speed=20.0)
    svc.start()
    try:
        port = svc.port
        svc.start_run()
        time.sleep(1.5)
        http(port, "POST", "/v1/control", {"command": "Pause"})
        time.sleep(0.05)

        _, raw = http(port, "GET", "/v1/metrics")
        d_submit = json.loads(raw)["decisions"]
        assert d_submit >= 2, "warmup too short to capture decisions"

        _, raw = http(port, "GET", "/v1/decisions?limit=400")
        decisions = json.loads(raw)["decisions"]
        target = next(
            d for d in reversed(decisions)
            if d["status"] == "Autonomous" and d["path"] == "agent" and d["domain"] == "Api"
        )

        status, raw = http(
            port, "POST", f"/v1/decisions/{target['id']}/feedback",
            {"score": -0.5, "override": "Throttle"},
        )
        assert status == 200 and json.loads(raw)["status"] == "queued", raw
        save("feedback_queued_response.json", raw)

        http(port, "POST", "/v1/control", {"command": "Resume"})
        deadline = time.time() + 30
        d_now = d_submit
        while time.time() < deadline and d_now <= d_submit:
            _, raw = http(port, "GET", "/v1/metrics")
            d_now = json.loads(raw)["decisions"]
            time.sleep(0.002)
        http(port, "POST", "/v1/control", {"command": "Pause"})

        _, raw = http(port, "GET", "/v1/metrics")
        d_confirm = json.loads(raw)["decisions"]

        over_raw = b""
        for _ in range(50):  # the queue drains at the next loop step; allow ms-scale lag
            status, over_raw = http(port, "GET", "/v1/decisions?status=Overridden&limit=400")
            overridden = json.loads(over_raw)["decisions"]
            if any(d["id"] == target["id"] and d["action"] == "Throttle" for d in overridden):
                break
            time.sleep(0.002)
        else:
            raise AssertionError("queued override never applied")
        save("decisions_overridden_live.json", over_raw)

        elapsed = d_confirm - d_submit
        assert 1 <= elapsed <= 2, f"poll too coarse: {elapsed} events elapsed"
        save("live_boundary.json", (json.dumps({
            "decision_id": target["id"],
            "override": "Throttle",
            "score": -0.5,
            "decisions_at_submit": d_submit,
            "decisions_at_confirm": d_confirm,
            "events_elapsed": elapsed,
        }, indent=2) + "\n").encode("utf-8"))

        http(port, "POST", "/v1/control", {"command": "Stop"})
        svc.join_run(30)
    finally:
        svc.shutdown()


def capture_pending_review(spec, cfg) -> None:
    """Catch a decision while it is actually held for review (the flagship
    scenario raises a couple of QuarantineContainer calls past the review
    gates), stop the run there, and score it through the API. Stopping
    first keeps the value tables still, so the alpha-step is exact."""
    print("pending-review captures:")
    svc = GatewayService(spec, model="agentic", seed=1, cfg=cfg, speed=500.0)
    svc.start()
    try:
        port = svc.port
        svc.start_run()
        deadline = time.time() + 60
        while time.time() < deadline:
            _, raw = http(port, "GET", "/v1/metrics")
            if json.loads(raw).get("pending_reviews", 0) >= 1:
                break
            time.sleep(0.005)
        else:
            raise AssertionError("no decision entered review on the flagship run")
        http(port, "POST", "/v1/control", {"command": "Pause"})
        time.sleep(0.05)

        http(port, "POST", "/v1/control", {"command": "Stop"})
        svc.join_run(30)
        assert svc.run_state == "finished"

        _, raw = http(port, "GET", "/v1/metrics")
        save("metrics_pending.json", raw)
        metrics = json.loads(raw)
        assert metrics["pending_reviews"] >= 1

        status, raw = http(port, "GET", "/v1/decisions?status=PendingReview&limit=400")
        assert status == 200
        save("pending_decisions.json", raw)
        pending = json.loads(raw)["decisions"]
        target = pending[-1]

        _, raw = http(port, "GET", "/v1/agents")
        save("agents_before_pending.json", raw)
        q_before = bucket_table(
            json.loads(raw)["agents"], target["entity"]["tenant"], target["domain"],
            target["bucket"],
        )[target["action"]]

        score = 1.0
        status, raw = http(
            port, "POST", f"/v1/decisions/{target['id']}/feedback", {"score": score}
        )
        assert status == 200 and json.loads(raw)["status"] == "applied", raw
        save("feedback_pending_response.json", raw)

        _, raw = http(port, "GET", "/v1/agents")
        save("agents_after_pending.json", raw)
        q_after = bucket_table(
            json.loads(raw)["agents"], target["entity"]["tenant"], target["domain"],
            target["bucket"],
        )[target["action"]]
        alpha = cfg.agent.learning_rate
        expected = q_before + alpha * (score - q_before)
        assert abs(q_after - expected) < ROUND_TOL, (q_before, q_after, expected)

        _, raw = http(port, "GET", "/v1/metrics")
        save("metrics_after_pending_score.json", raw)
        assert json.loads(raw)["pending_reviews"] == metrics["pending_reviews"] - 1

        save("pending_case.json", (json.dumps({
            "alpha": alpha,
            "decision_id": target["id"],
            "tenant": target["entity"]["tenant"],
            "domain": target["domain"],
            "bucket": target["bucket"],
            "action": target["action"],
            "score": score,
            "pending_before": metrics["pending_reviews"],
        }, indent=2) + "\n").encode("utf-8"))
    finally:
        svc.shutdown()


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    mini = load_scenario(
        resources.files("sentinelsim").joinpath("scenarios/saas_api_abuse.json").read_text()
    )
    flagship = load_scenario(
        resources.files("sentinelsim").joinpath("scenarios/default.json").read_text()
    )
    cfg = EngineConfig()
    capture_runlog(mini, cfg)
    capture_finished_service(mini, cfg)
    capture_live_boundary(mini, cfg)
    capture_pending_review(flagship, cfg)
    print("all fixtures captured and verified")


if __name__ == "__main__":
    main()
