/**
 * In-memory stub of the inference service.
 *
 * Holds a stack of prepared posterior payloads: each add-constraints call
 * advances to the next prepared payload, undo steps back, and the revision
 * counter always moves forward (as in the real service). The UI under test
 * must render these numbers verbatim; none of them come from real math.
 */

import type {
  AddResult,
  ConstraintDocument,
  FetchLike,
  GameConfigDoc,
  MarginalsPayload,
  PosteriorPayload,
  WhatIfPayload,
} from "../src/api.js";

export const STUB_CONFIG: GameConfigDoc = {
  players: ["ana", "bo", "cy", "di"],
  roles: [
    { name: "seer", count: 1, alignment: "GOOD" },
    { name: "villager", count: 2, alignment: "GOOD" },
    { name: "imp", count: 1, alignment: "EVIL" },
  ],
  game_kind: "CUSTOM",
};

function marginals(matrix: number[][]): MarginalsPayload {
  return {
    players: [...STUB_CONFIG.players],
    roles: STUB_CONFIG.roles.map((r) => r.name),
    matrix,
  };
}

/** Deliberately "odd" numbers so no client-side arithmetic could produce them. */
export const STAGE_MARGINALS: MarginalsPayload[] = [
  marginals([
    [0.31, 0.52, 0.17],
    [0.12, 0.61, 0.27],
    [0.4, 0.35, 0.25],
    [0.17, 0.52, 0.31],
  ]),
  marginals([
    [0.72, 0.2, 0.08],
    [0.05, 0.83, 0.12],
    [0.11, 0.44, 0.45],
    [0.12, 0.53, 0.35],
  ]),
  marginals([
    [0.97, 0.02, 0.01],
    [0.01, 0.95, 0.04],
    [0.01, 0.49, 0.5],
    [0.01, 0.54, 0.45],
  ]),
];

export const STAGE_ENTROPY = [3.21, 2.02, 0.77];
export const STAGE_FEASIBLE = [12, 7, 3];
export const STAGE_MAP: Record<string, string>[] = [
  { ana: "villager", bo: "villager", cy: "seer", di: "imp" },
  { ana: "seer", bo: "villager", cy: "imp", di: "villager" },
  { ana: "seer", bo: "villager", cy: "imp", di: "villager" },
];

export const WHAT_IF_IG_BITS = 1.37;
export const WHAT_IF_WEIGHT = 1.37;

export class StubService {
  revision = 0;
  stage = 0;
  sessionId = "stub-session-1";
  addCalls: Array<{ round: number; doc: ConstraintDocument }> = [];
  whatIfCalls = 0;
  vacuousMode = false;

  posterior(): PosteriorPayload {
    return {
      session_id: this.sessionId,
      revision: this.revision,
      marginals: STAGE_MARGINALS[this.stage],
      map_world: STAGE_MAP[this.stage],
      entropy_bits: STAGE_ENTROPY[this.stage],
      feasible_count: STAGE_FEASIBLE[this.stage],
      top_worlds: [
        { world: STAGE_MAP[this.stage], score: 2.5, probability: 0.41 },
      ],
    };
  }

  whatIf(): WhatIfPayload {
    this.whatIfCalls += 1;
    return {
      session_id: this.sessionId,
      revision: this.revision,
      ig_report: {
        hypothesis: { type: "hypo_role_in", args: {} },
        prior_entropy_bits: STAGE_ENTROPY[this.stage],
        posterior_entropy_bits: this.vacuousMode
          ? STAGE_ENTROPY[this.stage]
          : STAGE_ENTROPY[this.stage] - WHAT_IF_IG_BITS,
        ig_bits: this.vacuousMode ? 0.0 : WHAT_IF_IG_BITS,
        applied_weight: this.vacuousMode ? 0.0 : WHAT_IF_WEIGHT,
        vacuous: this.vacuousMode,
      },
      marginals: STAGE_MARGINALS[Math.min(this.stage + 1, STAGE_MARGINALS.length - 1)],
      entropy_bits: STAGE_ENTROPY[this.stage],
      feasible_count: STAGE_FEASIBLE[this.stage],
    };
  }

  readonly fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const reply = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
      });

    if (method === "POST" && path === "/sessions") {
      return reply(200, { session_id: this.sessionId, revision: this.revision });
    }
    if (method === "GET" && path.startsWith(`/sessions/${this.sessionId}/posterior`)) {
      return reply(200, this.posterior());
    }
    const addMatch = path.match(
      new RegExp(`^/sessions/${this.sessionId}/rounds/(\\d+)/constraints$`),
    );
    if (method === "POST" && addMatch) {
      const doc = JSON.parse(String(init?.body)) as ConstraintDocument;
      this.addCalls.push({ round: Number(addMatch[1]), doc });
      this.revision += 1;
      this.stage = Math.min(this.stage + 1, STAGE_MARGINALS.length - 1);
      return reply(200, {
        session_id: this.sessionId,
        revision: this.revision,
        added: 1,
        infeasible: false,
      } satisfies AddResult);
    }
    if (method === "POST" && path === `/sessions/${this.sessionId}/undo`) {
      if (this.addCalls.length === 0) {
        return reply(409, { code: "NOTHING_TO_UNDO", message: "nothing to undo" });
      }
      this.addCalls.pop();
      this.revision += 1;
      this.stage = Math.max(this.stage - 1, 0);
      return reply(200, { session_id: this.sessionId, revision: this.revision });
    }
    if (method === "POST" && path === `/sessions/${this.sessionId}/whatif`) {
      return reply(200, this.whatIf());
    }
    return reply(404, { code: "UNKNOWN_SESSION", message: path });
  };
}
