/** DOM rendering: pure functions from view state to elements.
 *
 * Each render rebuilds the panels from the store. The decision feed is
 * windowed — at most FEED_RENDER_LIMIT rows are materialized — so the
 * DOM stays bounded however long the run gets. All text content comes
 * from gateway payloads via the formatting helpers; nothing here derives
 * a risk, trust, or metric value of its own.
 */

import { bandOfBucket, fmtPercent, fmtScore, fmtVirtual } from "./format.js";
import type { DashboardStore, FeedbackState, Filters } from "./state.js";
import type { StreamStatus } from "./stream.js";
import type { DecisionDoc, MetricsView, PolicyChangeData, RunReport } from "./types.js";

/** Upper bound on decision rows materialized in the DOM. */
export const FEED_RENDER_LIMIT = 120;

export interface DashboardCallbacks {
  onFilterChange: (filters: Filters) => void;
  onReview: (decisionId: string, score: number, override?: string) => void;
  onControl: (command: string, extra?: Record<string, unknown>) => void;
  onScrub: (ts: number) => void;
}

export interface DashboardView {
  mode: "live" | "replay";
  source: string;
  store: DashboardStore;
  filters: Filters;
  streamStatus: StreamStatus | null;
  droppedTotal: number;
  /** Live REST metrics (richer than the last stream Metric frame). */
  metricsView: MetricsView | null;
  /** Replay-mode final report. */
  report: RunReport | null;
  /** Valid action names per domain, read from the agents payload. */
  actionsByDomain: Record<string, string[]>;
  scrub: { position: number; duration: number } | null;
  callbacks: DashboardCallbacks;
}

export function renderDashboard(root: HTMLElement, view: DashboardView): void {
  root.textContent = "";
  root.append(
    statusBar(view),
    grid([
      panel("metrics-panel", "Run metrics", metricsBody(view)),
      panel("pending-panel", "Review queue", pendingBody(view)),
      panel("decision-feed", "Decision feed", feedBody(view)),
      panel("trust-panel", "Entity trust", trustBody(view)),
      panel("timeline-panel", "Learned rules", timelineBody(view)),
    ]),
  );
}

// ---------------------------------------------------------------------------
// scaffolding
// ---------------------------------------------------------------------------

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}

function grid(panels: HTMLElement[]): HTMLElement {
  return el("main", { class: "grid" }, panels);
}

function panel(id: string, title: string, body: HTMLElement): HTMLElement {
  return el("section", { id, class: "panel" }, [
    el("h2", {}, [title]),
    body,
  ]);
}

function chip(text: string, cls: string): HTMLElement {
  return el("span", { class: `chip ${cls}` }, [text]);
}

// ---------------------------------------------------------------------------
// status bar
// ---------------------------------------------------------------------------

function statusBar(view: DashboardView): HTMLElement {
  const bar = el("header", { id: "status-bar" });
  const label =
    view.mode === "live"
      ? `LIVE · ${view.source}`
      : `REPLAY · ${view.report?.model ?? "?"} seed ${view.report?.seed ?? "?"}`;
  bar.append(el("span", { id: "mode-banner", class: `mode mode-${view.mode}` }, [label]));

  if (view.mode === "live") {
    bar.append(streamHealth(view), controls(view));
  } else if (view.scrub !== null) {
    bar.append(scrubber(view, view.scrub));
  }
  return bar;
}

function streamHealth(view: DashboardView): HTMLElement {
  const status = view.streamStatus ?? "stopped";
  const wrap = el("span", { id: "stream-health" }, [chip(status, `stream-${status}`)]);
  if (view.droppedTotal > 0) {
    wrap.append(
      el("span", { id: "gap-notice", class: "warn" }, [
        `${view.droppedTotal} frames dropped (buffer overrun) — feed resumed at the live edge`,
      ]),
    );
  }
  const state = view.metricsView?.state;
  if (state !== undefined) wrap.append(chip(state, `state-${state}`));
  return wrap;
}

function controls(view: DashboardView): HTMLElement {
  const wrap = el("span", { id: "run-controls" });
  for (const command of ["Start", "Pause", "Resume", "Stop"]) {
    const button = el("button", { "data-command": command }, [command.toLowerCase()]);
    button.addEventListener("click", () => view.callbacks.onControl(command));
    wrap.append(button);
  }
  const speed = el("input", {
    id: "speed-input",
    type: "number",
    min: "0",
    step: "10",
    value: "60",
    title: "virtual ms per wall ms (0 = unpaced)",
  });
  const apply = el("button", { id: "speed-apply" }, ["set speed"]);
  apply.addEventListener("click", () =>
    view.callbacks.onControl("SetSpeed", { multiplier: Number(speed.value) }),
  );
  wrap.append(speed, apply);
  return wrap;
}

function scrubber(
  view: DashboardView,
  scrub: { position: number; duration: number },
): HTMLElement {
  const input = el("input", {
    id: "scrubber",
    type: "range",
    min: "0",
    max: String(scrub.duration),
    value: String(scrub.position),
  });
  input.addEventListener("input", () => view.callbacks.onScrub(Number(input.value)));
  return el("span", { id: "scrub-wrap" }, [
    input,
    el("span", { id: "scrub-time" }, [fmtVirtual(scrub.position)]),
  ]);
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

function metricsBody(view: DashboardView): HTMLElement {
  const body = el("div", { class: "metrics" });
  const live = view.metricsView ?? view.store.metrics;
  const report = view.report;
  const rows: [string, string][] = [];

  if (live !== null) {
    rows.push(
      ["model", `${live.model} (seed ${live.seed})`],
      ["virtual time", fmtVirtual(live.virtual_now)],
      ["decisions", String(live.decisions)],
      ["precision", fmtPercent(live.precision)],
      ["recall", fmtPercent(live.recall)],
      ["f1", fmtPercent(live.f1)],
      [
        "confusion",
        `tp ${live.disclosed_confusion.tp} · fp ${live.disclosed_confusion.fp} · ` +
          `tn ${live.disclosed_confusion.tn} · fn ${live.disclosed_confusion.fn}`,
      ],
    );
  }
  const agentic = view.metricsView;
  if (agentic?.active_threat_level !== undefined) {
    rows.push(["threat level", fmtScore(agentic.active_threat_level)]);
  }
  if (agentic?.learned_rules !== undefined) {
    rows.push(["learned rules", String(agentic.learned_rules)]);
  }
  if (agentic?.pending_reviews !== undefined) {
    rows.push(["pending reviews", String(agentic.pending_reviews)]);
  }
  if (report !== null) {
    rows.push(
      ["per-family recall", familySummary(report)],
      ["learned rules", String(report.learned_rules)],
    );
  }

  const dl = el("dl");
  for (const [term, value] of rows) {
    dl.append(el("dt", {}, [term]), el("dd", { "data-metric": term }, [value]));
  }
  body.append(dl);
  return body;
}

function familySummary(report: RunReport): string {
  return Object.entries(report.per_family_recall)
    .map(([family, recall]) => `${family} ${fmtPercent(recall)}`)
    .join(" · ");
}

// ---------------------------------------------------------------------------
// decision feed
// ---------------------------------------------------------------------------

function feedBody(view: DashboardView): HTMLElement {
  const body = el("div");
  body.append(filterBar(view));
  const rows = view.store.filtered(view.filters);
  const shown = rows.slice(0, FEED_RENDER_LIMIT);

  const table = el("table", { class: "feed" });
  table.append(
    el("thead", {}, [
      el("tr", {}, ["time", "id", "entity", "event", "risk", "action", "status"].map((h) => el("th", {}, [h]))),
    ]),
  );
  const tbody = el("tbody");
  for (const doc of shown) tbody.append(feedRow(view, doc));
  table.append(tbody);
  body.append(table);

  const note =
    rows.length > shown.length
      ? `showing newest ${shown.length} of ${rows.length} matching decisions`
      : `${rows.length} matching decisions`;
  body.append(el("p", { id: "feed-note", class: "muted" }, [note]));
  return body;
}

function feedRow(view: DashboardView, doc: DecisionDoc): HTMLElement {
  const band = bandOfBucket(doc.bucket);
  const cells = [
    el("td", {}, [fmtVirtual(doc.ts)]),
    el("td", { class: "mono" }, [doc.id]),
    el("td", {}, [`${doc.entity.tenant}/${doc.entity.id}`]),
    el("td", {}, [`${doc.domain} · ${doc.event_kind}`]),
    el(
      "td",
      {},
      band === null
        ? [fmtScore(doc.risk)]
        : [chip(band, `band-${band.toLowerCase()}`), ` ${fmtScore(doc.risk)}`],
    ),
    el("td", {}, [doc.rule_id === null ? doc.action : `${doc.action} (rule ${doc.rule_id})`]),
    statusCell(view, doc),
  ];
  return el("tr", { "data-id": doc.id, class: `row-${doc.status.toLowerCase()}` }, cells);
}

function statusCell(view: DashboardView, doc: DecisionDoc): HTMLElement {
  const cell = el("td", {}, [chip(doc.status, `status-${doc.status.toLowerCase()}`)]);
  const fb = view.store.feedback.get(doc.id);
  if (fb !== undefined) cell.append(feedbackChip(fb));
  return cell;
}

function feedbackChip(fb: FeedbackState): HTMLElement {
  const text = fb.phase === "failed" ? `failed: ${fb.message ?? ""}` : fb.phase;
  return chip(text, `feedback-${fb.phase}`);
}

function filterBar(view: DashboardView): HTMLElement {
  const facets = view.store.facets();
  const bar = el("div", { id: "filter-bar" });
  bar.append(
    facetSelect(view, "tenant", ["all tenants", ...facets.tenants], view.filters.tenant),
    facetSelect(view, "domain", ["all domains", ...facets.domains], view.filters.domain),
    facetSelect(view, "band", ["all bands", "Low", "Medium", "High"], view.filters.band),
    facetSelect(
      view,
      "status",
      ["all statuses", "Autonomous", "PendingReview", "Overridden"],
      view.filters.status,
    ),
  );
  return bar;
}

function facetSelect(
  view: DashboardView,
  key: keyof Filters,
  options: string[],
  active: string | null,
): HTMLElement {
  const select = el("select", { "data-filter": key });
  options.forEach((option, i) => {
    const attrs: Record<string, string> = { value: i === 0 ? "" : option };
    if ((i === 0 && active === null) || option === active) attrs.selected = "selected";
    select.append(el("option", attrs, [option]));
  });
  select.addEventListener("change", () => {
    const value = select.value === "" ? null : select.value;
    view.callbacks.onFilterChange({ ...view.filters, [key]: value });
  });
  return select;
}

// ---------------------------------------------------------------------------
// review queue
// ---------------------------------------------------------------------------

function pendingBody(view: DashboardView): HTMLElement {
  const body = el("div");
  const pending = view.store.pendingQueue();
  if (pending.length === 0) {
    body.append(el("p", { class: "muted" }, ["no decisions awaiting review"]));
    return body;
  }
  for (const doc of pending) body.append(pendingCard(view, doc));
  return body;
}

function pendingCard(view: DashboardView, doc: DecisionDoc): HTMLElement {
  const card = el("div", { class: "pending-card", "data-id": doc.id });
  card.append(
    el("p", {}, [
      el("span", { class: "mono" }, [doc.id]),
      ` ${doc.domain} · ${doc.event_kind} · risk ${fmtScore(doc.risk)} → `,
      el("strong", {}, [doc.action]),
    ]),
    rationaleList(doc),
  );

  const confirm = el("button", { "data-review": "confirm" }, ["confirm (+1)"]);
  confirm.addEventListener("click", () => view.callbacks.onReview(doc.id, 1.0));
  const reject = el("button", { "data-review": "reject" }, ["reject (−1)"]);
  reject.addEventListener("click", () => view.callbacks.onReview(doc.id, -1.0));

  const actions = (view.actionsByDomain[doc.domain] ?? []).filter((a) => a !== doc.action);
  const select = el("select", { "data-review": "override-action" });
  for (const action of actions) select.append(el("option", { value: action }, [action]));
  const override = el("button", { "data-review": "override" }, ["override (−1)"]);
  override.addEventListener("click", () => {
    if (select.value !== "") view.callbacks.onReview(doc.id, -1.0, select.value);
  });
  if (view.mode === "replay") {
    for (const b of [confirm, reject, override]) b.setAttribute("disabled", "disabled");
    select.setAttribute("disabled", "disabled");
  }

  const row = el("div", { class: "review-actions" }, [confirm, reject, select, override]);
  const fb = view.store.feedback.get(doc.id);
  if (fb !== undefined) row.append(feedbackChip(fb));
  card.append(row);
  return card;
}

function rationaleList(doc: DecisionDoc): HTMLElement {
  const list = el("ul", { class: "rationale" });
  for (const factor of doc.rationale) {
    list.append(el("li", {}, [`${factor.name} ${fmtScore(factor.score)} — ${factor.detail}`]));
  }
  return list;
}

// ---------------------------------------------------------------------------
// trust
// ---------------------------------------------------------------------------

function trustBody(view: DashboardView): HTMLElement {
  const body = el("div");
  const rows = [...view.store.trust.values()].sort((a, b) => a.trust - b.trust);
  if (rows.length === 0) {
    body.append(el("p", { class: "muted" }, ["no trust updates yet"]));
    return body;
  }
  const table = el("table", { class: "trust" });
  for (const row of rows) {
    table.append(
      el("tr", { "data-entity": row.entity }, [
        el("td", { class: "mono" }, [row.entity]),
        el("td", { class: "trust-value" }, [fmtScore(row.trust)]),
        el("td", {}, [sparkline(row.history.map((h) => h.trust))]),
      ]),
    );
  }
  body.append(table);
  return body;
}

const SVG_NS = "http://www.w3.org/2000/svg";

/** Tiny polyline over values in [0, 1]; width fits the sample count. */
function sparkline(values: number[], width = 120, height = 24): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "sparkline");
  if (values.length > 0) {
    const step = values.length > 1 ? width / (values.length - 1) : 0;
    const points = values
      .map((v, i) => `${(i * step).toFixed(1)},${((1 - v) * (height - 2) + 1).toFixed(1)}`)
      .join(" ");
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", points);
    svg.append(line);
  }
  return svg;
}

// ---------------------------------------------------------------------------
// policy timeline
// ---------------------------------------------------------------------------

function timelineBody(view: DashboardView): HTMLElement {
  const body = el("div");
  const entries = view.store.timeline;
  if (entries.length === 0) {
    body.append(el("p", { class: "muted" }, ["no rules synthesized in this window"]));
    return body;
  }
  body.append(timelineSvg(entries, view));
  const list = el("ul", { class: "timeline-list" });
  for (const entry of entries) {
    const ttl = entry.ttl_ms === null ? "no expiry" : `ttl ${fmtVirtual(entry.ttl_ms)}`;
    list.append(
      el("li", { "data-rule": entry.rule_id }, [
        el("span", { class: "mono" }, [entry.rule_id]),
        ` ${fmtVirtual(entry.ts)} · ${entry.attribute}/${entry.itype} → ${entry.action} · ${ttl}` +
          ` · from ${entry.trigger_decision_ids.length} decisions`,
      ]),
    );
  }
  body.append(list);
  return body;
}

function timelineSvg(entries: PolicyChangeData[], view: DashboardView, width = 560): SVGSVGElement {
  const height = 14 * entries.length + 18;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("width", String(width));
  svg.setAttribute("class", "timeline-svg");
  const end = Math.max(
    view.scrub?.duration ?? 0,
    view.metricsView?.virtual_now ?? view.store.metrics?.virtual_now ?? 0,
    ...entries.map((e) => e.ts + (e.ttl_ms ?? 0)),
  );
  const x = (ts: number): number => (end > 0 ? (ts / end) * (width - 12) + 6 : 6);
  entries.forEach((entry, i) => {
    const y = 14 * i + 12;
    if (entry.ttl_ms !== null) {
      const bar = document.createElementNS(SVG_NS, "rect");
      bar.setAttribute("x", x(entry.ts).toFixed(1));
      bar.setAttribute("y", String(y - 4));
      bar.setAttribute("width", Math.max(2, x(entry.ts + entry.ttl_ms) - x(entry.ts)).toFixed(1));
      bar.setAttribute("height", "8");
      bar.setAttribute("class", "ttl-bar");
      svg.append(bar);
    }
    const marker = document.createElementNS(SVG_NS, "circle");
    marker.setAttribute("cx", x(entry.ts).toFixed(1));
    marker.setAttribute("cy", String(y));
    marker.setAttribute("r", "3");
    marker.setAttribute("class", "rule-marker");
    svg.append(marker);
  });
  return svg;
}
