// Waterfall render model: contribution bars from the base value to f(x),
// sorted by |phi| descending, with an additivity warning badge when the
// payload's parts do not telescope to its total.

import { ExplainResponse } from "./types.js";

export interface WaterfallRow {
  group: string;
  phi: number;
  start: number;
  end: number;
  direction: "up" | "down" | "flat";
}

export interface WaterfallModel {
  base: number;
  fx: number;
  rows: WaterfallRow[];
  finalTotal: number;
  additivityResidual: number;
  warn: boolean;
}

export function round3(value: number): string {
  return value.toFixed(3);
}

export function buildWaterfall(payload: ExplainResponse): WaterfallModel {
  const order = [...payload.groups.keys()].sort((a, b) => {
    const d = Math.abs(payload.groups[b].phi) - Math.abs(payload.groups[a].phi);
    return d !== 0 ? d : a - b; // ties keep payload order
  });
  const rows: WaterfallRow[] = [];
  let running = payload.base_value;
  for (const i of order) {
    const g = payload.groups[i];
    const start = running;
    running += g.phi;
    rows.push({
      group: g.name,
      phi: g.phi,
      start,
      end: running,
      direction: g.phi > 0 ? "up" : g.phi < 0 ? "down" : "flat",
    });
  }
  const residual = Math.abs(running - payload.fx);
  const tolerance = 3 * payload.groups.reduce((s, g) => s + g.std_err, 0) + 1e-9;
  return {
    base: payload.base_value,
    fx: payload.fx,
    rows,
    finalTotal: running,
    additivityResidual: residual,
    warn: residual > tolerance,
  };
}

export function renderWaterfallHtml(model: WaterfallModel): string {
  const lo = Math.min(model.base, ...model.rows.map((r) => Math.min(r.start, r.end)));
  const hi = Math.max(model.base, ...model.rows.map((r) => Math.max(r.start, r.end)));
  const span = hi - lo || 1;
  const pct = (v: number) => (100 * (v - lo)) / span;
  const parts: string[] = ['<div class="waterfall">'];
  if (model.warn) {
    parts.push(
      `<div class="badge badge-warn" role="alert">additivity residual ${model.additivityResidual.toExponential(2)}</div>`,
    );
  }
  parts.push(`<div class="wf-base">base E[f(x)] = ${round3(model.base)}</div>`);
  for (const row of model.rows) {
    const left = pct(Math.min(row.start, row.end)).toFixed(2);
    const width = Math.max(Math.abs(pct(row.end) - pct(row.start)), 0.5).toFixed(2);
    parts.push(
      `<div class="wf-row wf-${row.direction}" data-group="${row.group}">` +
        `<span class="wf-label">${row.group}</span>` +
        `<span class="wf-bar" style="margin-left:${left}%;width:${width}%"></span>` +
        `<span class="wf-phi">${row.phi >= 0 ? "+" : ""}${round3(row.phi)}</span>` +
        `<span class="wf-total">${round3(row.end)}</span>` +
        `</div>`,
    );
  }
  parts.push(`<div class="wf-final">f(x) = ${round3(model.fx)}</div>`);
  parts.push("</div>");
  return parts.join("\n");
}
