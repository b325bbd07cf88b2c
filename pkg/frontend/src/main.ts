/** Application entry point.
 *
 * Two modes, chosen by URL parameters:
 *   ?api=http://host:port  — live: NDJSON stream + REST against a running
 *                            service (default http://127.0.0.1:8787)
 *   ?replay=url/to/run-dir — offline: load the persisted artifacts of one
 *                            run and scrub through them; no backend.
 */

import { GatewayApi } from "./api.js";
import { FEED_RENDER_LIMIT, renderDashboard, type DashboardView } from "./render.js";
import { bundleDuration, framesFromBundle, loadRunLog, storeAt } from "./replay.js";
import { refreshDecisions, reviewDecision } from "./review.js";
import { DashboardStore, NO_FILTERS, type Filters } from "./state.js";
import { StreamClient, type StreamStatus } from "./stream.js";
import type { AgentDoc, Frame, MetricsView, RunReport } from "./types.js";

const RENDER_INTERVAL_MS = 200;
const POLL_INTERVAL_MS = 2000;

/** Action menu per domain, read off the agents payload's bucket tables. */
export function actionsFromAgents(agents: AgentDoc[]): Record<string, string[]> {
  const byDomain: Record<string, Set<string>> = {};
  for (const agent of agents) {
    const set = (byDomain[agent.domain] ??= new Set<string>());
    for (const bucket of Object.values(agent.buckets)) {
      for (const action of Object.keys(bucket)) set.add(action);
    }
  }
  return Object.fromEntries(
    Object.entries(byDomain).map(([domain, set]) => [domain, [...set].sort()]),
  );
}

interface AppState {
  view: DashboardView;
  dirty: boolean;
  renderedVersion: number;
}

function makeView(mode: "live" | "replay", source: string, store: DashboardStore): DashboardView {
  return {
    mode,
    source,
    store,
    filters: { ...NO_FILTERS },
    streamStatus: null,
    droppedTotal: 0,
    metricsView: null,
    report: null,
    actionsByDomain: {},
    scrub: null,
    callbacks: {
      onFilterChange: () => undefined,
      onReview: () => undefined,
      onControl: () => undefined,
      onScrub: () => undefined,
    },
  };
}

function startRenderLoop(root: HTMLElement, app: AppState): void {
  const tick = (): void => {
    if (app.dirty || app.view.store.version !== app.renderedVersion) {
      app.dirty = false;
      app.renderedVersion = app.view.store.version;
      renderDashboard(root, app.view);
    }
  };
  tick();
  setInterval(tick, RENDER_INTERVAL_MS);
}

// ---------------------------------------------------------------------------
// live mode
// ---------------------------------------------------------------------------

function startLive(root: HTMLElement, base: string): void {
  const api = new GatewayApi(base);
  const store = new DashboardStore();
  const app: AppState = { view: makeView("live", base, store), dirty: true, renderedVersion: -1 };

  app.view.callbacks = {
    onFilterChange: (filters: Filters) => {
      app.view.filters = filters;
      app.dirty = true;
    },
    onReview: (id, score, override) => {
      void reviewDecision(store, api, id, score, override)
        .catch(() => undefined) // the failure is already on the feedback chip
        .then(() => {
          app.dirty = true;
        });
    },
    onControl: (command, extra) => {
      void api
        .control(command, extra)
        .then(() => poll())
        .catch(() => undefined);
    },
    onScrub: () => undefined,
  };

  const stream = new StreamClient(
    base,
    {
      onFrame: (frame: Frame) => store.applyFrame(frame),
      onStatus: (status: StreamStatus) => {
        app.view.streamStatus = status;
        app.dirty = true;
      },
      onGap: () => {
        app.view.droppedTotal = stream.droppedTotal;
        app.dirty = true;
      },
    },
    { fromSeq: 0 },
  );

  const poll = async (): Promise<void> => {
    try {
      const [metrics, agents] = await Promise.all([api.metrics(), api.agents()]);
      app.view.metricsView = metrics;
      app.view.actionsByDomain = actionsFromAgents(agents);
      const hasQueued = [...store.feedback.values()].some((fb) => fb.phase === "queued");
      const hasPending = (metrics.pending_reviews ?? 0) > 0;
      if (hasQueued || hasPending) await refreshDecisions(store, api);
      app.dirty = true;
    } catch {
      // service unreachable; the stream status chip already says so
    }
  };

  stream.start();
  void poll();
  setInterval(() => void poll(), POLL_INTERVAL_MS);
  startRenderLoop(root, app);
}

// ---------------------------------------------------------------------------
// replay mode
// ---------------------------------------------------------------------------

async function startReplay(root: HTMLElement, runUrl: string): Promise<void> {
  const bundle = await loadRunLog(runUrl);
  const frames = framesFromBundle(bundle);
  const duration = bundleDuration(bundle);
  const store = storeAt(frames, Infinity);
  const app: AppState = {
    view: makeView("replay", runUrl, store),
    dirty: true,
    renderedVersion: -1,
  };
  app.view.report = bundle.report as RunReport;
  app.view.scrub = { position: duration, duration };
  // The run's closing metrics frame doubles as the metrics panel source.
  app.view.metricsView = (store.metrics as MetricsView | null) ?? null;

  app.view.callbacks = {
    onFilterChange: (filters: Filters) => {
      app.view.filters = filters;
      app.dirty = true;
    },
    onReview: () => undefined, // no backend to review against
    onControl: () => undefined,
    onScrub: (ts: number) => {
      app.view.scrub = { position: ts, duration };
      app.view.store = storeAt(frames, ts);
      app.view.metricsView = (app.view.store.metrics as MetricsView | null) ?? null;
      app.dirty = true;
    },
  };
  startRenderLoop(root, app);
}

// ---------------------------------------------------------------------------

export function boot(root: HTMLElement): void {
  const params = new URLSearchParams(window.location.search);
  const replayUrl = params.get("replay");
  if (replayUrl !== null) {
    void startReplay(root, replayUrl).catch((error: unknown) => {
      root.textContent = `failed to load run log: ${String(error)}`;
    });
    return;
  }
  startLive(root, params.get("api") ?? "http://127.0.0.1:8787");
}

const rootEl = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootEl !== null) boot(rootEl);

export { FEED_RENDER_LIMIT };
