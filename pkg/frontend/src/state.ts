/** Dashboard view state: a reducer over stream frames plus REST refreshes.
 *
 * Invariant: every number stored here arrived in a server payload. The
 * store reorders, filters, and counts documents; it never recomputes
 * risk, trust, or precision/recall itself.
 */

import { bandOfBucket } from "./format.js";
import type {
  DecisionDoc,
  DecisionStatus,
  Frame,
  MetricData,
  PolicyChangeData,
  RiskBand,
  RunCompleteData,
  TrustUpdateData,
} from "./types.js";

/** Upper bound on decisions kept in memory; the feed shows the newest. */
export const FEED_CAPACITY = 2000;
/** Sparkline depth per entity. */
export const TRUST_HISTORY_CAPACITY = 60;

export interface TrustRow {
  entity: string;
  trust: number;
  lastTs: number;
  history: { ts: number; trust: number }[];
}

export interface Filters {
  tenant: string | null;
  domain: string | null;
  band: RiskBand | null;
  status: DecisionStatus | null;
}

export const NO_FILTERS: Filters = { tenant: null, domain: null, band: null, status: null };

export type FeedbackPhase = "posting" | "queued" | "applied" | "failed";

export interface FeedbackState {
  phase: FeedbackPhase;
  message?: string;
}

export class DashboardStore {
  decisions: DecisionDoc[] = [];
  byId = new Map<string, DecisionDoc>();
  trust = new Map<string, TrustRow>();
  timeline: PolicyChangeData[] = [];
  metrics: MetricData | null = null;
  runComplete: RunCompleteData | null = null;
  /** Reviewer activity keyed by decision id. */
  feedback = new Map<string, FeedbackState>();
  version = 0;

  applyFrame(frame: Frame): void {
    switch (frame.kind) {
      case "Decision":
        this.pushDecision(frame.data);
        break;
      case "TrustUpdate":
        this.pushTrust(frame.data);
        break;
      case "PolicyChange":
        this.timeline.push(frame.data);
        break;
      case "Metric":
        this.metrics = frame.data;
        break;
      case "RunComplete":
        this.runComplete = frame.data;
        break;
      default:
        return; // Heartbeat/Gap are transport-level; the client handles them
    }
    this.version += 1;
  }

  private pushDecision(doc: DecisionDoc): void {
    const existing = this.byId.get(doc.id);
    if (existing !== undefined) {
      // Same id seen again (e.g. a REST refresh raced the stream): update
      // in place so status changes land, but do not duplicate the row.
      Object.assign(existing, doc);
      return;
    }
    this.decisions.push(doc);
    this.byId.set(doc.id, doc);
    while (this.decisions.length > FEED_CAPACITY) {
      const evicted = this.decisions.shift();
      if (evicted !== undefined && this.feedback.get(evicted.id) === undefined) {
        this.byId.delete(evicted.id);
      }
    }
  }

  private pushTrust(update: TrustUpdateData): void {
    let row = this.trust.get(update.entity);
    if (row === undefined) {
      row = { entity: update.entity, trust: update.trust, lastTs: update.ts, history: [] };
      this.trust.set(update.entity, row);
    }
    row.trust = update.trust;
    row.lastTs = update.ts;
    row.history.push({ ts: update.ts, trust: update.trust });
    while (row.history.length > TRUST_HISTORY_CAPACITY) row.history.shift();
  }

  /** Merge a GET /v1/decisions refresh: known ids are updated in place
   * (status flips after feedback), unknown ids are inserted in event
   * order — a refresh may carry rows older than the stream head. */
  applyDecisionList(docs: DecisionDoc[]): void {
    let appended = false;
    for (const doc of docs) {
      if (!this.byId.has(doc.id)) appended = true;
      this.pushDecision(doc);
    }
    if (appended) {
      this.decisions.sort((a, b) => (a.ts - b.ts) || (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
    }
    this.version += 1;
  }

  patchDecision(id: string, patch: Partial<DecisionDoc>): void {
    const doc = this.byId.get(id);
    if (doc === undefined) return;
    Object.assign(doc, patch);
    this.version += 1;
  }

  setFeedback(id: string, state: FeedbackState): void {
    this.feedback.set(id, state);
    this.version += 1;
  }

  /** Newest-first view of the feed under the active filters. */
  filtered(filters: Filters): DecisionDoc[] {
    const out: DecisionDoc[] = [];
    for (let i = this.decisions.length - 1; i >= 0; i -= 1) {
      const d = this.decisions[i];
      if (d === undefined) continue;
      if (filters.tenant !== null && d.entity.tenant !== filters.tenant) continue;
      if (filters.domain !== null && d.domain !== filters.domain) continue;
      if (filters.band !== null && bandOfBucket(d.bucket) !== filters.band) continue;
      if (filters.status !== null && d.status !== filters.status) continue;
      out.push(d);
    }
    return out;
  }

  /** Decisions awaiting a reviewer, oldest first. */
  pendingQueue(): DecisionDoc[] {
    return this.decisions.filter((d) => d.status === "PendingReview");
  }

  /** Distinct values for filter dropdowns, sorted. */
  facets(): { tenants: string[]; domains: string[] } {
    const tenants = new Set<string>();
    const domains = new Set<string>();
    for (const d of this.decisions) {
      tenants.add(d.entity.tenant);
      domains.add(d.domain);
    }
    return { tenants: [...tenants].sort(), domains: [...domains].sort() };
  }
}
