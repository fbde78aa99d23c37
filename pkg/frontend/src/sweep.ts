// Probability-vs-PGA sweep chart as an SVG string, with the 0.5 decision
// threshold drawn and the currently selected factor highlighted.

import { SensitivityResponse } from "./types.js";

export interface SweepPoint {
  pga: number;
  p: number;
}

export interface SweepModel {
  points: SweepPoint[]; // ascending pga
  current: SweepPoint | null;
  sptFactor: number;
}

export function buildSweep(payload: SensitivityResponse, currentPga: number): SweepModel {
  const column = 0; // single spt factor per request
  const points = payload.pga_factors
    .map((pga, i) => ({ pga, p: payload.p[i][column] }))
    .sort((a, b) => a.pga - b.pga);
  let current: SweepPoint | null = null;
  for (const pt of points) {
    if (current === null || Math.abs(pt.pga - currentPga) < Math.abs(current.pga - currentPga)) {
      current = pt;
    }
  }
  return { points, current, sptFactor: payload.spt_factors[column] };
}

const W = 320;
const H = 180;
const PAD = 24;

function sx(pga: number): number {
  return PAD + pga * (W - 2 * PAD);
}

function sy(p: number): number {
  return H - PAD - p * (H - 2 * PAD);
}

export function renderSweepSvg(model: SweepModel): string {
  const path = model.points
    .map((pt, i) => `${i === 0 ? "M" : "L"}${sx(pt.pga).toFixed(1)},${sy(pt.p).toFixed(1)}`)
    .join(" ");
  const circles = model.points
    .map(
      (pt) =>
        `<circle class="sweep-pt" cx="${sx(pt.pga).toFixed(1)}" cy="${sy(pt.p).toFixed(1)}" r="2.5"/>`,
    )
    .join("");
  const threshold = `<line class="sweep-threshold" x1="${sx(0)}" y1="${sy(0.5)}" x2="${sx(1)}" y2="${sy(0.5)}" stroke-dasharray="4 3"/>`;
  const marker = model.current
    ? `<circle class="sweep-current" cx="${sx(model.current.pga).toFixed(1)}" cy="${sy(model.current.p).toFixed(1)}" r="5"/>`
    : "";
  return (
    `<svg viewBox="0 0 ${W} ${H}" class="sweep">` +
    `<path class="sweep-line" d="${path}" fill="none"/>` +
    threshold +
    circles +
    marker +
    `</svg>`
  );
}
