/**
 * Posterior rendering: the probability heatmap, the MAP strip, and the
 * entropy sparkline. Cells show service numbers verbatim (fixed decimals);
 * no arithmetic happens here beyond formatting.
 */

import type { MarginalsPayload, PosteriorPayload } from "./api.js";

export const CELL_DIGITS = 3;
export const ENTROPY_DIGITS = 2;

export interface HeatmapModel {
  players: string[];
  roles: string[];
  /** formatted cell text, row-major in (player, role) order */
  cells: string[][];
  /** raw service values backing each cell */
  raw: number[][];
}

export function heatmapModel(marginals: MarginalsPayload): HeatmapModel {
  return {
    players: [...marginals.players],
    roles: [...marginals.roles],
    cells: marginals.matrix.map((row) => row.map((x) => x.toFixed(CELL_DIGITS))),
    raw: marginals.matrix.map((row) => [...row]),
  };
}

function shade(value: number): string {
  // perceptual-ish green ramp; purely cosmetic
  const alpha = Math.max(0, Math.min(1, value));
  return `rgba(46, 125, 50, ${(alpha * 0.85).toFixed(3)})`;
}

export function renderHeatmap(
  container: HTMLElement,
  marginals: MarginalsPayload,
  mapWorld: Record<string, string>,
): void {
  const model = heatmapModel(marginals);
  const table = document.createElement("table");
  table.className = "heatmap";

  const head = table.createTHead().insertRow();
  head.appendChild(document.createElement("th"));
  for (const role of model.roles) {
    const th = document.createElement("th");
    th.textContent = role;
    head.appendChild(th);
  }

  const body = table.createTBody();
  model.players.forEach((player, i) => {
    const row = body.insertRow();
    const label = document.createElement("th");
    label.textContent = player;
    row.appendChild(label);
    model.roles.forEach((role, j) => {
      const cell = row.insertCell();
      cell.textContent = model.cells[i][j];
      cell.dataset.player = player;
      cell.dataset.role = role;
      cell.style.backgroundColor = shade(model.raw[i][j]);
      if (mapWorld[player] === role) {
        cell.classList.add("map-pick");
      }
    });
  });

  container.replaceChildren(table);
}

export function renderMapStrip(container: HTMLElement, posterior: PosteriorPayload): void {
  const items = posterior.marginals.players.map((player) => {
    const role = posterior.map_world[player];
    return `<span class="map-chip" data-player="${player}">${player}: <b>${role}</b></span>`;
  });
  container.innerHTML = items.join(" ");
}

export interface EntropyPoint {
  revision: number;
  entropyBits: number;
}

export function renderEntropySparkline(
  container: HTMLElement,
  history: EntropyPoint[],
): void {
  if (history.length === 0) {
    container.textContent = "";
    return;
  }
  const latest = history[history.length - 1];
  const max = Math.max(...history.map((p) => p.entropyBits), 1e-9);
  const bars = history
    .map((p) => {
      const h = Math.max(2, Math.round((p.entropyBits / max) * 28));
      return `<span class="spark-bar" data-revision="${p.revision}" style="height:${h}px"></span>`;
    })
    .join("");
  container.innerHTML =
    `<span class="spark-bars">${bars}</span>` +
    `<span class="spark-label" data-entropy>${latest.entropyBits.toFixed(ENTROPY_DIGITS)} bits</span>`;
}

export function renderFeasibility(
  banner: HTMLElement,
  infeasible: boolean,
  message: string,
): void {
  banner.hidden = !infeasible;
  banner.textContent = infeasible ? message : "";
}
