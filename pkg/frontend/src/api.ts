/** Typed client for the gateway /v1 REST surface.
 *
 * Server errors arrive as `{"error": "<message>"}`; the message is
 * surfaced verbatim through ApiError so the UI can show exactly what the
 * service said (unknown decision, out-of-domain override, …).
 */

import type {
  AgentDoc,
  ControlResponse,
  DecisionDoc,
  FeedbackResponse,
  MetricsView,
  PolicyChangeData,
  PolicyDoc,
  TrustDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class GatewayApi {
  readonly base: string;
  private readonly fetchFn: typeof fetch;

  constructor(base: string, fetchFn: typeof fetch = fetch) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    const text = await response.text();
    let body: unknown = null;
    try {
      body = text.length > 0 ? JSON.parse(text) : null;
    } catch {
      throw new ApiError(response.status, `unparseable response: ${text.slice(0, 200)}`);
    }
    if (!response.ok) {
      const message =
        body !== null && typeof body === "object" && "error" in body
          ? String((body as { error: unknown }).error)
          : `request failed with status ${response.status}`;
      throw new ApiError(response.status, message);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async decisions(options: { status?: string; limit?: number } = {}): Promise<DecisionDoc[]> {
    const params = new URLSearchParams();
    if (options.status !== undefined) params.set("status", options.status);
    if (options.limit !== undefined) params.set("limit", String(options.limit));
    const query = params.toString();
    const doc = await this.request<{ decisions: DecisionDoc[] }>(
      `/v1/decisions${query ? `?${query}` : ""}`,
    );
    return doc.decisions;
  }

  async policies(): Promise<PolicyDoc[]> {
    return (await this.request<{ policies: PolicyDoc[] }>("/v1/policies")).policies;
  }

  async timeline(): Promise<PolicyChangeData[]> {
    return (await this.request<{ timeline: PolicyChangeData[] }>("/v1/policies/timeline")).timeline;
  }

  trust(entityKey: string): Promise<TrustDoc> {
    return this.request<TrustDoc>(`/v1/trust/${encodeURIComponent(entityKey)}`);
  }

  async agents(): Promise<AgentDoc[]> {
    return (await this.request<{ agents: AgentDoc[] }>("/v1/agents")).agents;
  }

  metrics(): Promise<MetricsView> {
    return this.request<MetricsView>("/v1/metrics");
  }

  feedback(decisionId: string, score: number, override?: string): Promise<FeedbackResponse> {
    const payload: { score: number; override?: string } = { score };
    if (override !== undefined) payload.override = override;
    return this.post<FeedbackResponse>(
      `/v1/decisions/${encodeURIComponent(decisionId)}/feedback`,
      payload,
    );
  }

  control(command: string, extra: Record<string, unknown> = {}): Promise<ControlResponse> {
    return this.post<ControlResponse>("/v1/control", { command, ...extra });
  }
}
