/**
 * Client-side session state.
 *
 * Tracks the latest revision the UI has rendered and refuses to go
 * backwards: a posterior tagged with an older revision than the one on
 * screen is stale and must not overwrite newer data. Mutations flow
 * through a busy flag so only one is in flight at a time.
 */

import type {
  GameConfigDoc,
  OffendingDetail,
  PosteriorPayload,
  WhatIfPayload,
} from "./api.js";

export interface SessionSnapshot {
  sessionId: string;
  config: GameConfigDoc;
  currentRound: number;
  lastRevision: number;
  posterior: PosteriorPayload | null;
  infeasible: boolean;
  offending: OffendingDetail | null;
  busy: boolean;
}

export class SessionStore {
  private snapshot: SessionSnapshot;
  private listeners: Array<(s: SessionSnapshot) => void> = [];
  private whatIfCache = new Map<string, WhatIfPayload>();

  constructor(sessionId: string, config: GameConfigDoc) {
    this.snapshot = {
      sessionId,
      config,
      currentRound: 1,
      lastRevision: 0,
      posterior: null,
      infeasible: false,
      offending: null,
      busy: false,
    };
  }

  get state(): SessionSnapshot {
    return this.snapshot;
  }

  subscribe(listener: (s: SessionSnapshot) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit() {
    for (const listener of this.listeners) listener(this.snapshot);
  }

  private patch(changes: Partial<SessionSnapshot>) {
    this.snapshot = { ...this.snapshot, ...changes };
    this.emit();
  }

  setBusy(busy: boolean) {
    this.patch({ busy });
  }

  setRound(round: number) {
    if (round >= 1) this.patch({ currentRound: round });
  }

  noteRevision(revision: number) {
    if (revision > this.snapshot.lastRevision) {
      this.whatIfCache.clear();
      this.patch({ lastRevision: revision });
    }
  }

  setFeasibility(infeasible: boolean, offending: OffendingDetail | null) {
    this.patch({ infeasible, offending });
  }

  /**
   * Accept a posterior only if it is at least as new as everything already
   * rendered. Returns whether it was applied.
   */
  applyPosterior(posterior: PosteriorPayload): boolean {
    if (posterior.revision < this.snapshot.lastRevision) {
      return false;
    }
    this.patch({
      posterior,
      lastRevision: posterior.revision,
      infeasible: false,
      offending: null,
    });
    return true;
  }

  cachedWhatIf(key: string): WhatIfPayload | undefined {
    const hit = this.whatIfCache.get(key);
    if (hit && hit.revision !== this.snapshot.lastRevision) {
      this.whatIfCache.delete(key);
      return undefined;
    }
    return hit;
  }

  cacheWhatIf(key: string, payload: WhatIfPayload) {
    this.whatIfCache.set(key, payload);
  }
}
