/** Wire types for the gateway /v1 API and its NDJSON frame stream.
 *
 * Everything here mirrors a server payload one-to-one. The dashboard is a
 * pure view over these documents: it never recomputes risk, trust, or
 * detection quality on its own.
 */

export type DecisionStatus = "Autonomous" | "PendingReview" | "Overridden";
export type RiskBand = "Low" | "Medium" | "High";

export interface EntityRef {
  kind: string;
  id: string;
  tenant: string;
}

export interface RationaleFactor {
  name: string;
  score: number;
  detail: string;
}

export interface DecisionDoc {
  id: string;
  ts: number;
  event_id: string;
  entity: EntityRef;
  domain: string;
  event_kind: string;
  risk: number;
  anomaly: number;
  trust_at: number;
  intel_match: number;
  /** Context-bucket key, e.g. "Api/High/intel" — domain, risk band, intel flag. */
  bucket: string;
  action: string;
  severity: number;
  status: DecisionStatus;
  latency_ms: number;
  path: string;
  rule_id: string | null;
  rationale: RationaleFactor[];
}

export interface TrustUpdateData {
  entity: string;
  trust: number;
  ts: number;
}

export interface PolicyChangeData {
  ts: number;
  rule_id: string;
  origin: string;
  attribute: string;
  itype: string;
  action: string;
  ttl_ms: number | null;
  trigger_decision_ids: string[];
}

export interface ConfusionMatrix {
  tp: number;
  fp: number;
  tn: number;
  fn: number;
}

export interface MetricData {
  model: string;
  seed: number;
  virtual_now: number;
  disclosed_confusion: ConfusionMatrix;
  precision: number | null;
  recall: number | null;
  f1: number | null;
  decisions: number;
}

export interface RunCompleteData {
  model: string;
  seed: number;
  decisions: number;
  events: number;
}

/** One line of GET /v1/events/stream. Heartbeat and Gap are stream-level
 * signals without payloads; everything else wraps a data document. */
export type Frame =
  | { seq: number; kind: "Decision"; data: DecisionDoc }
  | { seq: number; kind: "TrustUpdate"; data: TrustUpdateData }
  | { seq: number; kind: "PolicyChange"; data: PolicyChangeData }
  | { seq: number; kind: "Metric"; data: MetricData }
  | { seq: number; kind: "RunComplete"; data: RunCompleteData }
  | { seq: number; kind: "Heartbeat"; wall_ts: number }
  | { seq: number; kind: "Gap"; dropped: number };

export type DataFrame = Extract<Frame, { data: unknown }>;

// ---------------------------------------------------------------------------
// REST payloads
// ---------------------------------------------------------------------------

export interface TrustDoc {
  entity: string;
  trust: number;
  incident_count: number;
  last_update_ts: number;
}

export interface AgentDoc {
  tenant: string;
  domain: string;
  epsilon: number;
  policy_version: number;
  /** bucket key -> action name -> learned value */
  buckets: Record<string, Record<string, number>>;
}

export interface PolicyDoc {
  id: string;
  attribute: string;
  itype: string;
  value_hash: number;
  action: string;
  origin: string;
  created_ts: number;
  ttl_ms: number | null;
  hit_count: number;
}

/** GET /v1/metrics: a Metric snapshot plus service state. The last three
 * fields appear only when the served model is the agentic one. */
export interface MetricsView extends MetricData {
  state: string;
  stream_seq: number;
  active_threat_level?: number;
  learned_rules?: number;
  pending_reviews?: number;
}

export interface FeedbackResponse {
  status: "queued" | "applied";
  decision_id: string;
  action?: string;
  decision_status?: DecisionStatus;
}

export interface ControlResponse {
  ok: boolean;
  state: string;
}

// ---------------------------------------------------------------------------
// Persisted run-log artifacts (replay mode)
// ---------------------------------------------------------------------------

export interface LearningEntry {
  ts: number;
  decision_id: string;
  tenant: string;
  bucket: string;
  action: string;
  reward: number;
  q_after: number;
  policy_version: number;
  source: string;
}

export interface RunReport {
  scenario: string;
  scenario_digest: string;
  model: string;
  seed: number;
  events: number;
  malicious_events: number;
  confusion: ConfusionMatrix;
  precision: number | null;
  recall: number | null;
  f1: number | null;
  per_family_recall: Record<string, number>;
  latency: Record<string, { mean: number; median: number; p95: number; count: number }>;
  adaptability: number | null;
  learned_rules: number;
}

export interface SnapshotsDoc {
  trust: Record<string, { trust: number; incidents: number }>;
  profiles: Record<string, unknown>;
}

export interface RunLogBundle {
  decisions: DecisionDoc[];
  timeline: PolicyChangeData[];
  learning: LearningEntry[];
  snapshots: SnapshotsDoc;
  report: RunReport;
}
