"""Command-line entry point and the HTTP control/stream service.

Two subcommands:

  run    — headless batch evaluation over a (models x seeds) matrix,
           writing one artifact directory per run plus a comparison
           report. Inputs are validated in full before anything is
           written; invalid input exits with code 2 and no partial
           output.

  serve  — wrap a single live run in an HTTP service under /v1:
           an NDJSON event stream with resumable sequence numbers,
           decision/policy/trust/agent inspection endpoints, analyst
           feedback, and run control (start/pause/resume/speed/stop).
           Feedback and control commands are queued and applied at
           event boundaries, never mid-decision.

Everything here is plumbing around the engine; no detection logic.
"""

from __future__ import annotations

import argparse
import json
import queue
import sys
import threading
import time
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Optional
from urllib.parse import parse_qs, urlparse

from .agents import FeedbackRecord, MitigationAction
from .config import EngineConfig
from .events import (
    ScenarioError,
    ScenarioValidationError,
    canonical_json,
    load_scenario,
    scale_scenario,
)
from .sim import (
    MODELS,
    RunLog,
    Simulation,
    StopSimulation,
    comparison_report,
    render_comparison_md,
    run_report,
    write_run_dir,
)

#: --full stretches the desk-scale two-hour story onto a 72-hour horizon.
FULL_SCALE_FACTOR = 36

STREAM_BUFFER_FRAMES = 10_000
HEARTBEAT_SECONDS = 5.0


# ============================================================================
# CLI
# ============================================================================

def parse_seeds(text: str) -> list[int]:
    """Accept "1..10", "7", or "1,2,5". Ranges are inclusive."""
    text = text.strip()
    if ".." in text:
        lo_s, _, hi_s = text.partition("..")
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    seeds = [int(part) for part in text.split(",") if part.strip()]
    if not seeds:
        raise ValueError("no seeds given")
    if len(set(seeds)) != len(seeds):
        raise ValueError(f"duplicate seeds in {text!r}")
    return seeds


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 2


def _load_spec(path_text: str, full: bool):
    spec = load_scenario(Path(path_text).read_text(encoding="utf-8"))
    if full:
        spec = scale_scenario(spec, FULL_SCALE_FACTOR)
    return spec


def cli_run(args: argparse.Namespace) -> int:
    try:
        seeds = parse_seeds(args.seeds)
    except ValueError as err:
        return _fail(f"bad --seeds: {err}")
    models = list(dict.fromkeys(m.strip() for m in args.models.split(",") if m.strip()))
    if not models:
        return _fail("no models given")
    for model in models:
        if model not in MODELS:
            return _fail(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    try:
        spec = _load_spec(args.scenario, args.full)
    except OSError as err:
        return _fail(f"cannot read scenario: {err}")
    except (ScenarioValidationError, ScenarioError, ValueError) as err:
        return _fail(f"invalid scenario: {err}")

    cfg = EngineConfig()
    runs: list[RunLog] = []
    for model in models:
        for seed in seeds:
            run_log = Simulation(spec, model, seed, cfg).run()
            runs.append(run_log)
            rep = run_report(run_log, cfg)
            f1 = "n/a" if rep["f1"] is None else f"{rep['f1']:.3f}"
            print(
                f"{model} seed={seed}: {rep['events']} events, f1={f1}, "
                f"wall={run_log.wall_seconds:.2f}s"
            )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for run_log in runs:
        write_run_dir(run_log, out / f"{run_log.model}-seed{run_log.seed}", cfg,
                      export_truth=args.export_truth)
    report = comparison_report(runs, cfg)
    (out / "report.json").write_text(canonical_json(report) + "\n", encoding="utf-8")
    (out / "report.md").write_text(render_comparison_md(report), encoding="utf-8")
    (out / "runtime_summary.json").write_text(
        json.dumps(_runtime_summary(runs), indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(runs)} run dirs and comparison report under {out}")
    return 0


def _runtime_summary(runs: list[RunLog]) -> dict:
    per_run = []
    for r in runs:
        events = max(1, len(r.events))
        per_run.append(
            {
                "model": r.model,
                "seed": r.seed,
                "events": len(r.events),
                "wall_seconds": round(r.wall_seconds, 6),
                "security_seconds": round(r.security_seconds, 6),
                "mean_event_processing_ms": round(1000.0 * r.security_seconds / events, 6),
                "security_share_of_wall": round(r.security_seconds / r.wall_seconds, 6)
                if r.wall_seconds > 0 else None,
            }
        )
    from .sim import OVERHEAD_CAVEAT  # avoid import cycle at module load
    return {"runs": per_run, "caveat": OVERHEAD_CAVEAT}


# ============================================================================
# Frame bus (stream fan-out)
# ============================================================================

class FrameBus:
    """Bounded broadcast buffer with global sequence numbers.

    Slow readers that fall more than the buffer capacity behind simply
    skip forward; the stream reports the gap instead of blocking the
    simulation.
    """

    def __init__(self, capacity: int = STREAM_BUFFER_FRAMES):
        self._frames: deque[dict] = deque(maxlen=capacity)
        self._cond = threading.Condition()
        self._seq = 0

    def publish(self, kind: str, data: Any) -> int:
        with self._cond:
            self._seq += 1
            self._frames.append({"seq": self._seq, "kind": kind, "data": data})
            self._cond.notify_all()
            return self._seq

    def collect_since(self, cursor: int, timeout: float) -> list[dict]:
        deadline = time.monotonic() + timeout
        with self._cond:
            while True:
                newer = [f for f in self._frames if f["seq"] > cursor]
                if newer:
                    return newer
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return []
                self._cond.wait(remaining)

    @property
    def latest_seq(self) -> int:
        with self._cond:
            return self._seq


class _BusListener:
    """Adapter from engine callbacks to stream frames."""

    def __init__(self, bus: FrameBus):
        self.bus = bus

    def on_decision(self, decision_doc: dict) -> None:
        self.bus.publish("Decision", decision_doc)

    def on_policy(self, entry: dict) -> None:
        self.bus.publish("PolicyChange", entry)

    def on_trust(self, entity_key: str, trust: float, ts: int) -> None:
        self.bus.publish("TrustUpdate", {"entity": entity_key, "trust": round(trust, 6), "ts": ts})

    def on_metric(self, snapshot: dict) -> None:
        self.bus.publish("Metric", snapshot)


# ============================================================================
# Pacing
# ============================================================================

class Pacer:
    """Maps virtual time onto wall time under operator control.

    multiplier = virtual seconds per wall second; 0 means unthrottled.
    States: idle (created, not started), running, paused, stopped.
    """

    def __init__(self, multiplier: float = 0.0):
        self._cond = threading.Condition()
        self.state = "idle"
        self.multiplier = multiplier
        self._anchor_wall = 0.0
        self._anchor_virtual = 0
        self._last_virtual = 0

    def _reanchor(self) -> None:
        self._anchor_wall = time.monotonic()
        self._anchor_virtual = self._last_virtual

    def start(self) -> None:
        with self._cond:
            if self.state in ("idle", "paused"):
                self.state = "running"
                self._reanchor()
                self._cond.notify_all()

    def pause(self) -> None:
        with self._cond:
            if self.state == "running":
                self.state = "paused"
                self._cond.notify_all()

    def resume(self) -> None:
        self.start()

    def set_speed(self, multiplier: float) -> None:
        if multiplier < 0:
            raise ValueError("speed multiplier must be >= 0")
        with self._cond:
            self.multiplier = multiplier
            self._reanchor()
            self._cond.notify_all()

    def stop(self) -> None:
        with self._cond:
            self.state = "stopped"
            self._cond.notify_all()

    def wait(self, virtual_ts: int) -> None:
        """Block until virtual_ts is due; raises StopSimulation on stop."""
        while True:
            with self._cond:
                if self.state == "stopped":
                    raise StopSimulation()
                if self.state != "running":
                    self._cond.wait(0.5)
                    continue
                if self.multiplier <= 0:
                    self._last_virtual = virtual_ts
                    return
                target = self._anchor_wall + (virtual_ts - self._anchor_virtual) / (1000.0 * self.multiplier)
                delay = target - time.monotonic()
                if delay <= 0:
                    self._last_virtual = virtual_ts
                    return
                self._cond.wait(min(delay, 0.25))


# ============================================================================
# Service
# ============================================================================

class GatewayService:
    """One live simulation behind an HTTP /v1 surface."""

    def __init__(self, spec, model: str = "agentic", seed: int = 1,
                 cfg: Optional[EngineConfig] = None, host: str = "127.0.0.1", port: int = 0,
                 reviewer: bool = True, speed: float = 0.0, autostart: bool = False):
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}")
        self.cfg = cfg or EngineConfig()
        self.sim = Simulation(
            spec, model, seed, self.cfg,
            reviewer_attached=reviewer and model == "agentic",
        )
        self.bus = FrameBus()
        self.pacer = Pacer(speed)
        self.listener = _BusListener(self.bus)
        self.feedback_queue: "queue.Queue[FeedbackRecord]" = queue.Queue()
        self.run_log: Optional[RunLog] = None
        self._sim_thread: Optional[threading.Thread] = None
        self._state_lock = threading.Lock()
        self._autostart = autostart

        self._http = _GatewayServer((host, port), _Handler, service=self)
        self._http_thread = threading.Thread(target=self._http.serve_forever, daemon=True)

    # -- lifecycle --------------------------------------------------------

    @property
    def port(self) -> int:
        return self._http.server_address[1]

    @property
    def url(self) -> str:
        host = self._http.server_address[0]
        return f"http://{host}:{self.port}"

    def start(self) -> None:
        self._http_thread.start()
        if self._autostart:
            self.start_run()

    def start_run(self) -> None:
        with self._state_lock:
            if self._sim_thread is None:
                self.pacer.start()
                self._sim_thread = threading.Thread(target=self._sim_main, daemon=True)
                self._sim_thread.start()
            else:
                self.pacer.resume()

    def shutdown(self) -> None:
        self.pacer.stop()
        if self._sim_thread is not None:
            self._sim_thread.join(timeout=10)
        self._http.shutdown()
        self._http.server_close()

    def join_run(self, timeout: Optional[float] = None) -> None:
        if self._sim_thread is not None:
            self._sim_thread.join(timeout)

    @property
    def run_state(self) -> str:
        if self.run_log is not None:
            return "finished"
        if self._sim_thread is None:
            return "idle"
        return self.pacer.state

    def _sim_main(self) -> None:
        log = self.sim.run(
            listener=self.listener,
            command_drain=self._drain_feedback,
            pacer=self.pacer.wait,
        )
        self.run_log = log
        self.bus.publish(
            "RunComplete",
            {"model": log.model, "seed": log.seed, "decisions": len(log.decisions),
             "events": len(log.events)},
        )

    def _drain_feedback(self) -> list[FeedbackRecord]:
        records = []
        while True:
            try:
                records.append(self.feedback_queue.get_nowait())
            except queue.Empty:
                return records

    # -- command surface --------------------------------------------------

    def submit_feedback(self, decision_id: str, score: float,
                        override: Optional[str]) -> dict:
        if self.sim.model != "agentic":
            raise ValueError("feedback applies to the agentic model only")
        decision = self.sim.decisions_by_id.get(decision_id)
        if decision is None:
            raise KeyError(decision_id)
        override_action = None
        if override is not None:
            try:
                override_action = MitigationAction(override)
            except ValueError:
                raise ValueError(f"unknown action {override!r}")
        record = FeedbackRecord(
            decision_id=decision_id, score=score, override=override_action,
            ts=self.sim.virtual_now,
        )
        if self._sim_thread is not None and self._sim_thread.is_alive():
            self.feedback_queue.put(record)
            return {"status": "queued", "decision_id": decision_id}
        # Run is over: apply synchronously so the caller sees the result.
        self.sim._apply_feedback(record, self.listener)
        return {
            "status": "applied",
            "decision_id": decision_id,
            "action": decision.action.value,
            "decision_status": decision.status.value,
        }

    def control(self, command: str, payload: dict) -> dict:
        if command == "Start" or command == "Resume":
            self.start_run()
        elif command == "Pause":
            self.pacer.pause()
        elif command == "Stop":
            self.pacer.stop()
        elif command == "SetSpeed":
            multiplier = payload.get("multiplier")
            if not isinstance(multiplier, (int, float)):
                raise ValueError("SetSpeed needs a numeric 'multiplier'")
            self.pacer.set_speed(float(multiplier))
        else:
            raise ValueError(f"unknown command {command!r}")
        return {"ok": True, "state": self.run_state}

    # -- view surface -----------------------------------------------------

    def decisions_view(self, status: Optional[str], limit: int) -> list[dict]:
        from .sim import _decision_to_dict
        snapshot = list(self.sim.decisions)
        if status is not None:
            snapshot = [d for d in snapshot if d.status.value == status]
        return [_decision_to_dict(d) for d in snapshot[-limit:]]

    def policies_view(self) -> list[dict]:
        if self.sim.model != "agentic":
            return []
        now = self.sim.virtual_now
        out = []
        for rule in self.sim.engine.rules.unexpired(now):
            out.append(
                {
                    "id": rule.id,
                    "attribute": rule.attribute,
                    "itype": rule.itype.value,
                    "value_hash": rule.value_hash,
                    "action": rule.action.value,
                    "origin": rule.origin.value,
                    "created_ts": rule.created_ts,
                    "ttl_ms": rule.ttl_ms,
                    "hit_count": rule.hit_count,
                }
            )
        return out

    def timeline_view(self) -> list[dict]:
        if self.sim.model != "agentic":
            return []
        return list(self.sim.engine.policy_timeline)

    def trust_view(self, entity_key: str) -> Optional[dict]:
        if self.sim.model != "agentic":
            return None
        state = self.sim.engine.trust.get(entity_key)
        if state is None:
            return None
        return {
            "entity": entity_key,
            "trust": round(state.trust, 6),
            "incident_count": state.incident_count,
            "last_update_ts": state.last_update_ts,
        }

    def agents_view(self) -> list[dict]:
        if self.sim.model != "agentic":
            return []
        out = []
        for (tenant, domain), agent in sorted(
            self.sim.engine.agents.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
        ):
            out.append(
                {
                    "tenant": tenant,
                    "domain": domain.value,
                    "epsilon": round(agent.epsilon, 6),
                    "policy_version": agent.policy_version,
                    "buckets": {
                        bucket.key(): {a.value: round(q, 6) for a, q in table.items()}
                        for bucket, table in sorted(agent.q.items(), key=lambda kv: kv[0].key())
                    },
                }
            )
        return out

    def metrics_view(self) -> dict:
        snap = self.sim.metrics_snapshot()
        snap["state"] = self.run_state
        snap["stream_seq"] = self.bus.latest_seq
        if self.sim.model == "agentic":
            snap["active_threat_level"] = round(self.sim.engine.threat_level, 6)
            snap["learned_rules"] = sum(
                1 for r in self.sim.engine.rules.rules if r.origin.value == "Learned"
            )
            snap["pending_reviews"] = len(self.sim.engine.pending)
        return snap


class _GatewayServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, handler, service: GatewayService):
        super().__init__(addr, handler)
        self.service = service


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def service(self) -> GatewayService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # quiet by default
        pass

    # -- helpers ----------------------------------------------------------

    def _send_json(self, code: int, doc: Any) -> None:
        body = (canonical_json(doc) + "\n").encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        doc = json.loads(raw.decode("utf-8"))
        if not isinstance(doc, dict):
            raise ValueError("body must be a JSON object")
        return doc

    # -- routing ----------------------------------------------------------

    def do_OPTIONS(self):  # CORS preflight for the dashboard dev server
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        url = urlparse(self.path)
        query = parse_qs(url.query)
        parts = [p for p in url.path.split("/") if p]
        if not parts or parts[0] != "v1":
            self._send_json(404, {"error": "not found"})
            return
        route = parts[1:]
        try:
            if route == ["events", "stream"]:
                self._stream(query)
            elif route == ["decisions"]:
                status = query.get("status", [None])[0]
                limit = int(query.get("limit", ["200"])[0])
                self._send_json(200, {"decisions": self.service.decisions_view(status, limit)})
            elif route == ["policies"]:
                self._send_json(200, {"policies": self.service.policies_view()})
            elif route == ["policies", "timeline"]:
                self._send_json(200, {"timeline": self.service.timeline_view()})
            elif len(route) == 2 and route[0] == "trust":
                doc = self.service.trust_view(route[1])
                if doc is None:
                    self._send_json(404, {"error": f"no trust state for {route[1]!r}"})
                else:
                    self._send_json(200, doc)
            elif route == ["agents"]:
                self._send_json(200, {"agents": self.service.agents_view()})
            elif route == ["metrics"]:
                self._send_json(200, self.service.metrics_view())
            else:
                self._send_json(404, {"error": "not found"})
        except (BrokenPipeError, ConnectionResetError):
            pass

    def do_POST(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        if not parts or parts[0] != "v1":
            self._send_json(404, {"error": "not found"})
            return
        route = parts[1:]
        try:
            body = self._read_body()
        except (ValueError, json.JSONDecodeError) as err:
            self._send_json(400, {"error": f"bad body: {err}"})
            return
        try:
            if len(route) == 3 and route[0] == "decisions" and route[2] == "feedback":
                score = body.get("score")
                if not isinstance(score, (int, float)):
                    self._send_json(400, {"error": "feedback needs a numeric 'score'"})
                    return
                result = self.service.submit_feedback(
                    route[1], float(score), body.get("override")
                )
                self._send_json(200, result)
            elif route == ["control"]:
                command = body.get("command")
                if not isinstance(command, str):
                    self._send_json(400, {"error": "control needs a 'command'"})
                    return
                self._send_json(200, self.service.control(command, body))
            else:
                self._send_json(404, {"error": "not found"})
        except KeyError as err:
            self._send_json(404, {"error": f"unknown decision {err}"})
        except ValueError as err:
            self._send_json(400, {"error": str(err)})
        except (BrokenPipeError, ConnectionResetError):
            pass

    # -- streaming --------------------------------------------------------

    def _stream(self, query: dict) -> None:
        kinds_raw = query.get("kinds", [""])[0]
        kinds = {k for k in kinds_raw.split(",") if k} or None
        cursor = int(query.get("from_seq", ["0"])[0])

        self.send_response(200)
        self.send_header("Content-Type", "application/x-ndjson")
        self.send_header("Cache-Control", "no-store")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Connection", "close")
        self.end_headers()

        try:
            while True:
                frames = self.service.bus.collect_since(cursor, timeout=HEARTBEAT_SECONDS)
                if not frames:
                    self._write_line({"kind": "Heartbeat", "seq": cursor, "wall_ts": round(time.time(), 3)})
                    continue
                if frames[0]["seq"] > cursor + 1 and cursor > 0:
                    self._write_line(
                        {"kind": "Gap", "dropped": frames[0]["seq"] - cursor - 1, "seq": cursor}
                    )
                for frame in frames:
                    cursor = frame["seq"]
                    if kinds is None or frame["kind"] in kinds:
                        self._write_line(frame)
        except (BrokenPipeError, ConnectionResetError):
            return

    def _write_line(self, doc: dict) -> None:
        self.wfile.write((json.dumps(doc, separators=(",", ":")) + "\n").encode("utf-8"))
        self.wfile.flush()


# ============================================================================
# Entry point
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentinelsim",
        description="Deterministic adaptive-defense simulation: batch evaluation and live service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a (models x seeds) evaluation matrix")
    run_p.add_argument("--scenario", required=True, help="scenario JSON file")
    run_p.add_argument("--models", required=True, help="comma list from: " + ", ".join(MODELS))
    run_p.add_argument("--seeds", required=True, help='e.g. "1..10" or "1,2,5"')
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--full", action="store_true",
                       help=f"stretch the timeline x{FULL_SCALE_FACTOR} (long-horizon profile)")
    run_p.add_argument("--export-truth", action="store_true",
                       help="include ground-truth labels in events.ndjson")

    serve_p = sub.add_parser("serve", help="serve one live run over HTTP /v1")
    serve_p.add_argument("--scenario", required=True)
    serve_p.add_argument("--model", default="agentic", help="pipeline to run (default agentic)")
    serve_p.add_argument("--seed", type=int, default=1)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8787)
    serve_p.add_argument("--speed", type=float, default=60.0,
                         help="virtual seconds per wall second; 0 = unthrottled")
    serve_p.add_argument("--no-reviewer", action="store_true",
                         help="run without a human reviewer: nothing waits for approval")
    serve_p.add_argument("--autostart", action="store_true",
                         help="start the run immediately instead of waiting for a Start command")
    return parser


def cli_serve(args: argparse.Namespace) -> int:
    if args.model not in MODELS:
        return _fail(f"unknown model {args.model!r}; choose from {', '.join(MODELS)}")
    try:
        spec = _load_spec(args.scenario, full=False)
    except OSError as err:
        return _fail(f"cannot read scenario: {err}")
    except (ScenarioValidationError, ScenarioError, ValueError) as err:
        return _fail(f"invalid scenario: {err}")
    service = GatewayService(
        spec, model=args.model, seed=args.seed, host=args.host, port=args.port,
        reviewer=not args.no_reviewer, speed=args.speed, autostart=args.autostart,
    )
    service.start()
    print(f"serving scenario {spec.name!r} ({args.model}, seed {args.seed}) at {service.url}/v1")
    if not args.autostart:
        print('run is idle; POST {"command": "Start"} to /v1/control to begin')
    try:
        while True:
            time.sleep(1.0)
    except KeyboardInterrupt:
        pass
    finally:
        service.shutdown()
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cli_run(args)
    return cli_serve(args)


if __name__ == "__main__":
    sys.exit(main())
