/**
 * Typed client for the inference service HTTP API.
 *
 * The UI never computes probabilities itself: every number it shows comes
 * from one of these response payloads. The fetch implementation is
 * injectable so tests can run against a stub service.
 */

export interface RoleSpecDoc {
  name: string;
  count: number;
  alignment: "GOOD" | "EVIL";
}

export interface GameConfigDoc {
  players: string[];
  roles: RoleSpecDoc[];
  game_kind: "AVALON" | "MAFIA" | "CUSTOM";
}

export interface ConstraintObject {
  type: string;
  args: Record<string, unknown>;
  weight?: number;
  auto_weight?: boolean;
}

export interface ConstraintDocument {
  evidence: ConstraintObject[];
  phenomenon: ConstraintObject[];
  assertions: ConstraintObject[];
  hypotheses: ConstraintObject[];
}

export interface ViewDocument {
  kind: "objective" | "role";
  role?: string;
  viewer?: string;
  knowledge?: ConstraintObject[];
}

export interface SettingsDocument {
  preset?: string;
  assertion_weight?: number;
  w_strong?: number;
  w_mid?: number;
  w_low?: number;
  ig_scale?: number;
  global_scale?: number;
}

export interface MarginalsPayload {
  players: string[];
  roles: string[];
  matrix: number[][];
}

export interface WorldEntry {
  world: Record<string, string>;
  score: number;
  probability: number;
}

export interface PosteriorPayload {
  session_id: string;
  revision: number;
  marginals: MarginalsPayload;
  map_world: Record<string, string>;
  entropy_bits: number;
  feasible_count: number;
  top_worlds: WorldEntry[];
}

export interface OffendingDetail {
  constraint: ConstraintObject;
  round: number;
}

export interface AddResult {
  session_id: string;
  revision: number;
  added: number;
  infeasible: boolean;
  offending?: OffendingDetail;
}

export interface IgReportPayload {
  hypothesis: ConstraintObject;
  prior_entropy_bits: number;
  posterior_entropy_bits: number;
  ig_bits: number;
  applied_weight: number;
  vacuous: boolean;
}

export interface WhatIfPayload {
  session_id: string;
  revision: number;
  ig_report: IgReportPayload;
  marginals: MarginalsPayload;
  entropy_bits: number;
  feasible_count: number;
}

export interface SessionInfo {
  session_id: string;
  revision: number;
  config: GameConfigDoc;
  settings: Required<SettingsDocument>;
  view: ViewDocument;
  rounds: Record<string, number>;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail?: unknown,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.json();
    if (!response.ok) {
      throw new ServiceError(
        response.status,
        (body && body.code) || "UNKNOWN",
        (body && body.message) || `request failed with ${response.status}`,
        body && body.detail,
      );
    }
    return body as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  createSession(
    config: GameConfigDoc,
    settings?: SettingsDocument,
    view?: ViewDocument,
  ): Promise<{ session_id: string; revision: number }> {
    const body: Record<string, unknown> = { config };
    if (settings) body.settings = settings;
    if (view) body.view = view;
    return this.post("/sessions", body);
  }

  getSession(id: string): Promise<SessionInfo> {
    return this.request(`/sessions/${id}`);
  }

  updateSettings(id: string, settings: SettingsDocument): Promise<{ revision: number }> {
    return this.request(`/sessions/${id}/settings`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(settings),
    });
  }

  addConstraints(id: string, round: number, doc: ConstraintDocument): Promise<AddResult> {
    return this.post(`/sessions/${id}/rounds/${round}/constraints`, doc);
  }

  getPosterior(id: string, opts?: { upto?: number; topk?: number }): Promise<PosteriorPayload> {
    const params = new URLSearchParams();
    if (opts?.upto !== undefined) params.set("upto", String(opts.upto));
    if (opts?.topk !== undefined) params.set("topk", String(opts.topk));
    const query = params.toString();
    return this.request(`/sessions/${id}/posterior${query ? `?${query}` : ""}`);
  }

  whatIf(id: string, candidate: ConstraintObject): Promise<WhatIfPayload> {
    return this.post(`/sessions/${id}/whatif`, candidate);
  }

  undo(id: string): Promise<{ session_id: string; revision: number }> {
    return this.post(`/sessions/${id}/undo`);
  }
}

export function emptyDocument(): ConstraintDocument {
  return { evidence: [], phenomenon: [], assertions: [], hypotheses: [] };
}
