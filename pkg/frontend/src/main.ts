/**
 * Browser bootstrap: read the setup form, start the app, bind the event
 * and what-if forms. Everything interesting lives in app.ts and friends;
 * this file only touches the concrete page.
 */

import { GameConfigDoc, ServiceClient } from "./api.js";
import { AssistantApp } from "./app.js";
import { claimToCandidate, GameEvent } from "./events.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function parseSeats(raw: string): string[] {
  return raw
    .split(",")
    .map((s) => s.trim())
    .filter(Boolean);
}

function readConfig(): GameConfigDoc {
  const players = parseSeats(el<HTMLInputElement>("players").value);
  const rolesRaw = el<HTMLInputElement>("roles").value;
  // "merlin:1:GOOD, servant:2:GOOD, assassin:1:EVIL"
  const roles = parseSeats(rolesRaw).map((entry) => {
    const [name, count, alignment] = entry.split(":").map((s) => s.trim());
    return {
      name,
      count: Number(count || "1"),
      alignment: (alignment || "GOOD").toUpperCase() as "GOOD" | "EVIL",
    };
  });
  const kind = el<HTMLSelectElement>("game-kind").value as GameConfigDoc["game_kind"];
  return { players, roles, game_kind: kind };
}

export function bootstrap(): void {
  const client = new ServiceClient(
    el<HTMLInputElement>("service-url").value || "http://127.0.0.1:8000",
  );
  const app = new AssistantApp(client, {
    heatmap: el("heatmap"),
    mapStrip: el("map-strip"),
    entropy: el("entropy"),
    banner: el("banner"),
    status: el("status"),
    whatIfBadge: el("whatif-badge"),
    whatIfPreview: el("whatif-preview"),
    undoButton: el<HTMLButtonElement>("undo"),
  });

  el<HTMLFormElement>("setup-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const myRole = el<HTMLInputElement>("my-role").value.trim() || null;
    void app
      .start(
        readConfig(),
        {
          myRole,
          viewer: el<HTMLInputElement>("my-seat").value.trim() || null,
          knownEvils: parseSeats(el<HTMLInputElement>("known-evils").value),
          candidatePair: parseSeats(el<HTMLInputElement>("candidates").value),
        },
        { preset: el<HTMLSelectElement>("preset").value },
      )
      .then(() => {
        el("setup-panel").hidden = true;
        el("play-panel").hidden = false;
      })
      .catch((err) => {
        el("setup-errors").textContent = String(err);
      });
  });

  el<HTMLFormElement>("event-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const kind = el<HTMLSelectElement>("event-kind").value;
    const a = el<HTMLInputElement>("event-a").value.trim();
    const b = parseSeats(el<HTMLInputElement>("event-b").value);
    const c = el<HTMLInputElement>("event-c").value.trim();
    let event: GameEvent;
    switch (kind) {
      case "proposal":
        event = { kind: "proposal", proposer: a, team: b };
        break;
      case "vote-yes":
      case "vote-no":
        event = { kind: "vote", voter: a, yes: kind === "vote-yes", team: b };
        break;
      case "quest":
        event = { kind: "quest", team: b, failCount: Number(c || "0") };
        break;
      case "night-kill":
        event = { kind: "night_kill", victim: a, revealedRole: c || "bystander" };
        break;
      case "claim":
      default:
        event = {
          kind: "claim_role",
          speaker: a,
          target: b[0] ?? a,
          set: c || "evil",
          mode: el<HTMLSelectElement>("claim-mode").value as never,
        };
        break;
    }
    void app.logEvent(event);
  });

  el<HTMLButtonElement>("next-round").addEventListener("click", () => app.nextRound());

  el<HTMLFormElement>("whatif-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const candidate = claimToCandidate(
      el<HTMLInputElement>("whatif-speaker").value.trim(),
      el<HTMLInputElement>("whatif-target").value.trim(),
      el<HTMLInputElement>("whatif-set").value.trim() || "evil",
    );
    void app.previewWhatIf(candidate);
  });

  el<HTMLButtonElement>("whatif-commit").addEventListener("click", () => {
    void app.commitWhatIf();
  });
}

if (typeof document !== "undefined" && document.getElementById("setup-form")) {
  bootstrap();
}
