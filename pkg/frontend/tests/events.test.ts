import { describe, expect, it } from "vitest";

import { claimToCandidate, eventToDocument } from "../src/events.js";

describe("event forms map one-to-one onto the constraint grammar", () => {
  it("team proposal becomes a strong team-good hypothesis", () => {
    const doc = eventToDocument({
      kind: "proposal", proposer: "p1", team: ["p1", "p2"],
    });
    expect(doc.hypotheses).toEqual([
      {
        type: "hypo_team_good",
        args: { speaker: "p1", team: ["p1", "p2"] },
        weight: 0.5,
      },
    ]);
    expect(doc.evidence).toEqual([]);
  });

  it("votes become weak team hypotheses with the vote's polarity", () => {
    const yes = eventToDocument({ kind: "vote", voter: "p3", yes: true, team: ["p1"] });
    expect(yes.hypotheses[0].type).toBe("hypo_team_good");
    expect(yes.hypotheses[0].weight).toBe(0.1);
    const no = eventToDocument({ kind: "vote", voter: "p3", yes: false, team: ["p1"] });
    expect(no.hypotheses[0].type).toBe("hypo_team_evil");
  });

  it("a failed quest becomes hard evil_at_least; a clean one adds nothing", () => {
    const failed = eventToDocument({ kind: "quest", team: ["p1", "p2", "p3"], failCount: 2 });
    expect(failed.phenomenon).toEqual([
      { type: "evil_at_least", args: { team: ["p1", "p2", "p3"], min: 2 } },
    ]);
    const clean = eventToDocument({ kind: "quest", team: ["p1", "p2"], failCount: 0 });
    expect(clean.phenomenon).toEqual([]);
  });

  it("night kill and lynch reveal become hard role evidence", () => {
    const kill = eventToDocument({
      kind: "night_kill", victim: "p4", revealedRole: "bystander",
    });
    expect(kill.evidence).toEqual([
      { type: "role_is", args: { player: "p4", role: "bystander" } },
    ]);
    const reveal = eventToDocument({ kind: "lynch_reveal", player: "p2", role: "mafia" });
    expect(reveal.evidence[0].args).toEqual({ player: "p2", role: "mafia" });
  });

  it("claims honour the chosen strength", () => {
    const assertion = eventToDocument({
      kind: "claim_role", speaker: "p4", target: "p1", set: "evil", mode: "assert",
    });
    expect(assertion.assertions[0].type).toBe("assert_role_in");

    const manual = eventToDocument({
      kind: "claim_role", speaker: "p4", target: "p1", set: "evil", mode: "manual",
    });
    expect(manual.hypotheses[0].weight).toBe(0.2);

    const auto = eventToDocument({
      kind: "claim_role", speaker: "p4", target: "p1", set: "evil", mode: "auto",
    });
    expect(auto.hypotheses[0].auto_weight).toBe(true);
    expect(auto.hypotheses[0].weight).toBeUndefined();
  });

  it("self-role claims are assertions; what-if candidates are auto hypotheses", () => {
    const self = eventToDocument({ kind: "claim_self", speaker: "p2", role: "percival" });
    expect(self.assertions[0]).toEqual({
      type: "assert_role_is",
      args: { speaker: "p2", role: "percival" },
    });
    expect(claimToCandidate("p1", "p5", "evil")).toEqual({
      type: "hypo_role_in",
      args: { speaker: "p1", target: "p5", set: "evil" },
      auto_weight: true,
    });
  });
});
