/** Offline mode: render a persisted run directory with no live backend.
 *
 * A batch run writes, per (model, seed): `decisions.ndjson` (one decision
 * document per line — the same shape the live stream carries),
 * `policy_timeline.json`, `learning.ndjson`, `snapshots.json` (final
 * trust state), and `report.json`. Replay loads those artifacts, rebuilds
 * the frame sequence in virtual-time order, and feeds it through the same
 * store the live stream uses — so every panel renders identically, plus a
 * scrubber since the whole timeline is known up front.
 */

import type {
  DecisionDoc,
  Frame,
  LearningEntry,
  PolicyChangeData,
  RunLogBundle,
  RunReport,
  SnapshotsDoc,
} from "./types.js";
import { DashboardStore } from "./state.js";

function parseNdjson<T>(text: string): T[] {
  const out: T[] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed.length > 0) out.push(JSON.parse(trimmed) as T);
  }
  return out;
}

/** Fetch all artifacts of one run directory (served statically). */
export async function loadRunLog(
  baseUrl: string,
  fetchFn: typeof fetch = fetch,
): Promise<RunLogBundle> {
  const base = baseUrl.replace(/\/$/, "");
  const grab = async (name: string): Promise<string> => {
    const response = await fetchFn(`${base}/${name}`);
    if (!response.ok) {
      throw new Error(`cannot load ${name}: status ${response.status}`);
    }
    return response.text();
  };
  const [decisionsText, timelineText, learningText, snapshotsText, reportText] =
    await Promise.all([
      grab("decisions.ndjson"),
      grab("policy_timeline.json"),
      grab("learning.ndjson"),
      grab("snapshots.json"),
      grab("report.json"),
    ]);
  return {
    decisions: parseNdjson<DecisionDoc>(decisionsText),
    timeline: JSON.parse(timelineText) as PolicyChangeData[],
    learning: parseNdjson<LearningEntry>(learningText),
    snapshots: JSON.parse(snapshotsText) as SnapshotsDoc,
    report: JSON.parse(reportText) as RunReport,
  };
}

/** Rebuild the stream: decisions and policy changes in virtual-time
 * order, a synthetic trust track from each decision's observed trust,
 * and a closing RunComplete. Sequence numbers are assigned densely. */
export function framesFromBundle(bundle: RunLogBundle): Frame[] {
  type Pending =
    | { ts: number; order: number; kind: "Decision"; data: DecisionDoc }
    | { ts: number; order: number; kind: "PolicyChange"; data: PolicyChangeData };
  const pending: Pending[] = [];
  bundle.decisions.forEach((d, i) => pending.push({ ts: d.ts, order: i, kind: "Decision", data: d }));
  bundle.timeline.forEach((t, i) =>
    pending.push({ ts: t.ts, order: i - bundle.timeline.length, kind: "PolicyChange", data: t }),
  );
  // Policy changes sort ahead of decisions at the same virtual instant
  // (their negative order), matching the engine's maintenance-first step.
  pending.sort((a, b) => a.ts - b.ts || a.order - b.order);

  const frames: Frame[] = [];
  for (const item of pending) {
    frames.push({ seq: frames.length + 1, kind: item.kind, data: item.data } as Frame);
    if (item.kind === "Decision") {
      frames.push({
        seq: frames.length + 1,
        kind: "TrustUpdate",
        data: { entity: entityKey(item.data), trust: item.data.trust_at, ts: item.data.ts },
      });
    }
  }
  frames.push({
    seq: frames.length + 1,
    kind: "RunComplete",
    data: {
      model: bundle.report.model,
      seed: bundle.report.seed,
      decisions: bundle.decisions.length,
      events: bundle.report.events,
    },
  });
  return frames;
}

export function entityKey(decision: DecisionDoc): string {
  return `${decision.entity.tenant}:${decision.entity.id}`;
}

/** Store state as of virtual time `upTo` (Infinity = full run). Replay
 * rebuilds from scratch on each scrub — the frame count per run is small
 * enough that this stays instant. */
export function storeAt(frames: Frame[], upTo: number): DashboardStore {
  const store = new DashboardStore();
  for (const frame of frames) {
    if ("data" in frame && typeof frame.data === "object" && frame.data !== null) {
      const ts = (frame.data as { ts?: number }).ts;
      if (ts !== undefined && ts > upTo) continue;
    }
    if (frame.kind === "RunComplete" && upTo !== Infinity) continue;
    store.applyFrame(frame);
  }
  return store;
}

/** Highest virtual timestamp in the bundle, for the scrubber range. */
export function bundleDuration(bundle: RunLogBundle): number {
  let max = 0;
  for (const d of bundle.decisions) max = Math.max(max, d.ts);
  for (const t of bundle.timeline) max = Math.max(max, t.ts);
  return max;
}
