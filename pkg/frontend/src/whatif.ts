/**
 * What-if panel: non-mutating info-gain probes.
 *
 * Shows how many bits a candidate claim would buy and a preview heatmap of
 * the posterior it would induce, all straight from the what-if endpoint.
 * "Commit" replays the candidate as a real constraint through the normal
 * log-event path.
 */

import type { ConstraintObject, ServiceClient, WhatIfPayload } from "./api.js";
import { renderHeatmap } from "./heatmap.js";
import type { SessionStore } from "./state.js";

export const IG_DIGITS = 2;
export const VACUOUS_TEXT = "contradicts everything known";

export function igBadgeText(payload: WhatIfPayload): string {
  if (payload.ig_report.vacuous) {
    return VACUOUS_TEXT;
  }
  return `${payload.ig_report.ig_bits.toFixed(IG_DIGITS)} bits`;
}

export function weightBadgeText(payload: WhatIfPayload): string {
  return `weight ${payload.ig_report.applied_weight.toFixed(IG_DIGITS)}`;
}

export async function probeWhatIf(
  client: ServiceClient,
  store: SessionStore,
  candidate: ConstraintObject,
): Promise<WhatIfPayload> {
  const key = JSON.stringify(candidate);
  const cached = store.cachedWhatIf(key);
  if (cached) {
    return cached;
  }
  const payload = await client.whatIf(store.state.sessionId, candidate);
  store.cacheWhatIf(key, payload);
  return payload;
}

export function renderWhatIf(
  badge: HTMLElement,
  preview: HTMLElement,
  payload: WhatIfPayload,
): void {
  badge.textContent = igBadgeText(payload);
  badge.dataset.igBits = String(payload.ig_report.ig_bits);
  badge.dataset.appliedWeight = String(payload.ig_report.applied_weight);
  renderHeatmap(preview, payload.marginals, {});
}
