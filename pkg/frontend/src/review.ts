/** The human-in-the-loop flow: score or override a decision, update the
 * view optimistically, and reconcile with what the service reports back.
 *
 * Two server paths exist. While the run is live the service queues the
 * verdict and applies it at the next simulation step ("queued"); after
 * the run it applies synchronously and returns the final action and
 * status ("applied"). Either way the learners receive the score — the
 * value-table change is observable through GET /v1/agents.
 */

import { ApiError, GatewayApi } from "./api.js";
import type { DashboardStore } from "./state.js";
import type { FeedbackResponse } from "./types.js";

export async function reviewDecision(
  store: DashboardStore,
  api: GatewayApi,
  decisionId: string,
  score: number,
  override?: string,
): Promise<FeedbackResponse> {
  store.setFeedback(decisionId, { phase: "posting" });
  let response: FeedbackResponse;
  try {
    response = await api.feedback(decisionId, score, override);
  } catch (error) {
    const message = error instanceof ApiError ? error.message : String(error);
    store.setFeedback(decisionId, { phase: "failed", message });
    throw error;
  }
  if (response.status === "applied") {
    store.patchDecision(decisionId, {
      ...(response.action !== undefined ? { action: response.action } : {}),
      ...(response.decision_status !== undefined ? { status: response.decision_status } : {}),
    });
    store.setFeedback(decisionId, { phase: "applied" });
  } else {
    // Optimistic: show the verdict as in flight; a decisions refresh (or
    // the next stream frame for this id) flips the row to its final state.
    store.setFeedback(decisionId, { phase: "queued" });
  }
  return response;
}

/** Pull the latest decision documents so queued verdicts reconcile. */
export async function refreshDecisions(
  store: DashboardStore,
  api: GatewayApi,
  limit = 200,
): Promise<void> {
  store.applyDecisionList(await api.decisions({ limit }));
  for (const [id, fb] of store.feedback) {
    if (fb.phase !== "queued") continue;
    const doc = store.byId.get(id);
    if (doc !== undefined && doc.status === "Overridden") {
      store.setFeedback(id, { phase: "applied" });
    }
  }
}
