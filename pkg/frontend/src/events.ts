/**
 * Event forms -> constraint documents.
 *
 * Each in-game happening the user can log maps to exactly one document in
 * the service grammar; weights follow the standard cue strengths (proposal
 * 0.5, votes 0.1, chat claims 0.2) unless the form picks auto weighting.
 */

import { ConstraintDocument, ConstraintObject, emptyDocument } from "./api.js";

export type WeightMode = "auto" | "manual";

export type GameEvent =
  | { kind: "proposal"; proposer: string; team: string[] }
  | { kind: "vote"; voter: string; yes: boolean; team: string[] }
  | { kind: "quest"; team: string[]; failCount: number }
  | { kind: "night_kill"; victim: string; revealedRole: string }
  | { kind: "lynch_reveal"; player: string; role: string }
  | {
      kind: "claim_role";
      speaker: string;
      target: string;
      set: string; // good | evil | faction name
      mode: "assert" | WeightMode;
      weight?: number;
    }
  | { kind: "claim_self"; speaker: string; role: string }
  | { kind: "claim_team"; speaker: string; team: string[]; mode: "assert" | WeightMode };

const PROPOSAL_WEIGHT = 0.5;
const VOTE_WEIGHT = 0.1;
const CHAT_WEIGHT = 0.2;

function hypo(entry: ConstraintObject, mode: WeightMode, weight: number): ConstraintObject {
  if (mode === "auto") {
    return { ...entry, auto_weight: true };
  }
  return { ...entry, weight };
}

export function eventToDocument(event: GameEvent): ConstraintDocument {
  const doc = emptyDocument();
  switch (event.kind) {
    case "proposal":
      doc.hypotheses.push({
        type: "hypo_team_good",
        args: { speaker: event.proposer, team: event.team },
        weight: PROPOSAL_WEIGHT,
      });
      break;
    case "vote":
      doc.hypotheses.push({
        type: event.yes ? "hypo_team_good" : "hypo_team_evil",
        args: { speaker: event.voter, team: event.team },
        weight: VOTE_WEIGHT,
      });
      break;
    case "quest":
      if (event.failCount >= 1) {
        doc.phenomenon.push({
          type: "evil_at_least",
          args: { team: event.team, min: event.failCount },
        });
      }
      break;
    case "night_kill":
      doc.evidence.push({
        type: "role_is",
        args: { player: event.victim, role: event.revealedRole },
      });
      break;
    case "lynch_reveal":
      doc.evidence.push({
        type: "role_is",
        args: { player: event.player, role: event.role },
      });
      break;
    case "claim_role": {
      const args = { speaker: event.speaker, target: event.target, set: event.set };
      if (event.mode === "assert") {
        doc.assertions.push({ type: "assert_role_in", args });
      } else {
        doc.hypotheses.push(
          hypo({ type: "hypo_role_in", args }, event.mode, event.weight ?? CHAT_WEIGHT),
        );
      }
      break;
    }
    case "claim_self":
      doc.assertions.push({
        type: "assert_role_is",
        args: { speaker: event.speaker, role: event.role },
      });
      break;
    case "claim_team": {
      const args = { speaker: event.speaker, team: event.team };
      if (event.mode === "assert") {
        doc.assertions.push({ type: "assert_team_good", args });
      } else {
        doc.hypotheses.push(
          hypo({ type: "hypo_team_good", args }, event.mode, PROPOSAL_WEIGHT),
        );
      }
      break;
    }
  }
  return doc;
}

/** A candidate for the what-if panel (never posted directly). */
export function claimToCandidate(
  speaker: string,
  target: string,
  set: string,
): ConstraintObject {
  return {
    type: "hypo_role_in",
    args: { speaker, target, set },
    auto_weight: true,
  };
}
