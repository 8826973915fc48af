/**
 * Setup-wizard knowledge builder.
 *
 * Turns "I am merlin, the evils are p2 and p5" style private information
 * into the hard-evidence view document the service expects, using the same
 * rules the backend applies when it derives views from ground truth:
 * the viewer's own role is pinned, merlin's known evils are restricted to
 * the evil role set, percival's candidates to {merlin, morgana}, and an
 * evil player's fellow evils to the evil role set.
 */

import type { ConstraintObject, GameConfigDoc, ViewDocument } from "./api.js";

export interface WizardInput {
  myRole: string | null; // null = objective spectator
  viewer: string | null;
  knownEvils: string[]; // merlin / evil seats
  candidatePair: string[]; // percival's merlin-or-morgana seats
}

export function evilRoles(config: GameConfigDoc): string[] {
  return config.roles.filter((r) => r.alignment === "EVIL").map((r) => r.name);
}

export function validateWizard(config: GameConfigDoc, input: WizardInput): string[] {
  const problems: string[] = [];
  const players = new Set(config.players);
  if (input.myRole !== null) {
    if (!config.roles.some((r) => r.name === input.myRole)) {
      problems.push(`unknown role '${input.myRole}'`);
    }
    if (!input.viewer || !players.has(input.viewer)) {
      problems.push("pick which seat is yours");
    }
  }
  for (const p of [...input.knownEvils, ...input.candidatePair]) {
    if (!players.has(p)) problems.push(`unknown player '${p}'`);
  }
  if (input.viewer && input.knownEvils.includes(input.viewer)) {
    problems.push("known evils should not include your own seat");
  }
  if (input.candidatePair.length > 0 && input.candidatePair.length !== 2) {
    problems.push("the candidate pair must name exactly two seats");
  }
  return problems;
}

export function buildViewDocument(config: GameConfigDoc, input: WizardInput): ViewDocument {
  if (input.myRole === null) {
    return { kind: "objective" };
  }
  const problems = validateWizard(config, input);
  if (problems.length) {
    throw new Error(problems.join("; "));
  }
  const knowledge: ConstraintObject[] = [
    { type: "role_is", args: { player: input.viewer, role: input.myRole } },
  ];
  const evils = evilRoles(config);
  const role = input.myRole.toLowerCase();
  if (role === "percival") {
    const candidates = config.roles
      .map((r) => r.name)
      .filter((name) => ["merlin", "morgana"].includes(name.toLowerCase()));
    for (const seat of input.candidatePair) {
      knowledge.push({ type: "role_in", args: { player: seat, roles: candidates } });
    }
  } else {
    for (const seat of input.knownEvils) {
      knowledge.push({ type: "role_in", args: { player: seat, roles: evils } });
    }
  }
  return { kind: "role", role: input.myRole, viewer: input.viewer!, knowledge };
}
