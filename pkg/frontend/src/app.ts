/**
 * Page controller: wires the wizard, the event log, the heatmap panel and
 * the what-if panel to the service client. One mutation in flight at a
 * time; every refresh re-renders from the latest service payload only.
 */

import {
  ConstraintObject,
  GameConfigDoc,
  ServiceClient,
  ServiceError,
  SettingsDocument,
} from "./api.js";
import { eventToDocument, GameEvent } from "./events.js";
import {
  EntropyPoint,
  renderEntropySparkline,
  renderFeasibility,
  renderHeatmap,
  renderMapStrip,
} from "./heatmap.js";
import { buildViewDocument, WizardInput } from "./knowledge.js";
import { SessionStore } from "./state.js";
import { probeWhatIf, renderWhatIf } from "./whatif.js";

export interface AppElements {
  heatmap: HTMLElement;
  mapStrip: HTMLElement;
  entropy: HTMLElement;
  banner: HTMLElement;
  status: HTMLElement;
  whatIfBadge: HTMLElement;
  whatIfPreview: HTMLElement;
  undoButton: HTMLButtonElement;
}

export class AssistantApp {
  store!: SessionStore;
  private entropyHistory: EntropyPoint[] = [];
  private pendingWhatIf: ConstraintObject | null = null;

  constructor(
    private readonly client: ServiceClient,
    private readonly el: AppElements,
  ) {
    this.el.undoButton.addEventListener("click", () => {
      void this.undo();
    });
  }

  /** Create the session from the wizard's answers and draw the prior. */
  async start(
    config: GameConfigDoc,
    wizard: WizardInput,
    settings?: SettingsDocument,
  ): Promise<void> {
    const view = buildViewDocument(config, wizard);
    const created = await this.client.createSession(config, settings, view);
    this.store = new SessionStore(created.session_id, config);
    this.store.noteRevision(created.revision);
    await this.refresh();
  }

  private setStatus(text: string) {
    this.el.status.textContent = text;
  }

  /** While a mutation is in flight, what is on screen is visibly stale. */
  private markStale(stale: boolean) {
    this.el.heatmap.classList.toggle("stale", stale);
    if (stale) {
      this.setStatus("updating...");
    }
  }

  async refresh(): Promise<void> {
    try {
      const posterior = await this.client.getPosterior(this.store.state.sessionId);
      if (!this.store.applyPosterior(posterior)) {
        return; // stale response: a newer revision is already on screen
      }
      this.entropyHistory.push({
        revision: posterior.revision,
        entropyBits: posterior.entropy_bits,
      });
      renderHeatmap(this.el.heatmap, posterior.marginals, posterior.map_world);
      renderMapStrip(this.el.mapStrip, posterior);
      renderEntropySparkline(this.el.entropy, this.entropyHistory);
      renderFeasibility(this.el.banner, false, "");
      this.setStatus(
        `revision ${posterior.revision} - ${posterior.feasible_count} feasible worlds`,
      );
    } catch (err) {
      if (err instanceof ServiceError && err.status === 409) {
        this.store.setFeasibility(true, (err.detail as never) ?? null);
        renderFeasibility(
          this.el.banner,
          true,
          `Contradiction: ${err.message} - undo the last entry?`,
        );
        return;
      }
      throw err;
    }
  }

  /** Post one logged event, then re-render from the service. */
  async logEvent(event: GameEvent): Promise<void> {
    if (this.store.state.busy) return;
    this.store.setBusy(true);
    this.markStale(true);
    try {
      const doc = eventToDocument(event);
      const result = await this.client.addConstraints(
        this.store.state.sessionId,
        this.store.state.currentRound,
        doc,
      );
      this.store.noteRevision(result.revision);
      if (result.infeasible) {
        this.store.setFeasibility(true, result.offending ?? null);
      }
      await this.refresh();
      if (result.infeasible) {
        renderFeasibility(
          this.el.banner,
          true,
          "That entry contradicts everything known so far - undo?",
        );
      }
    } finally {
      this.markStale(false);
      this.store.setBusy(false);
    }
  }

  async undo(): Promise<void> {
    if (this.store.state.busy) return;
    this.store.setBusy(true);
    this.markStale(true);
    try {
      const result = await this.client.undo(this.store.state.sessionId);
      this.store.noteRevision(result.revision);
      await this.refresh();
    } finally {
      this.markStale(false);
      this.store.setBusy(false);
    }
  }

  async previewWhatIf(candidate: ConstraintObject): Promise<void> {
    const payload = await probeWhatIf(this.client, this.store, candidate);
    this.pendingWhatIf = candidate;
    renderWhatIf(this.el.whatIfBadge, this.el.whatIfPreview, payload);
  }

  /** Promote the previewed claim to a real hypothesis constraint. */
  async commitWhatIf(): Promise<void> {
    if (!this.pendingWhatIf) return;
    const candidate = this.pendingWhatIf;
    this.pendingWhatIf = null;
    const doc = {
      evidence: [],
      phenomenon: [],
      assertions: [],
      hypotheses: [candidate],
    };
    this.store.setBusy(true);
    try {
      const result = await this.client.addConstraints(
        this.store.state.sessionId,
        this.store.state.currentRound,
        doc,
      );
      this.store.noteRevision(result.revision);
      await this.refresh();
    } finally {
      this.store.setBusy(false);
    }
  }

  nextRound(): void {
    this.store.setRound(this.store.state.currentRound + 1);
    this.setStatus(`now logging round ${this.store.state.currentRound}`);
  }
}
