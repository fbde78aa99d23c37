// Client-side mirrors of the SiteRecord invariants; invalid values never
// reach the network.

import { N_LAYERS, SitePayload, SOIL_TYPES } from "./types.js";

export interface FieldError {
  field: string;
  message: string;
}

function finite(v: number): boolean {
  return typeof v === "number" && Number.isFinite(v);
}

export function validateLayerField(field: "spt" | "soil", value: number): string | null {
  if (field === "spt") {
    if (!finite(value) || value < 0) return "SPT blow count must be finite and >= 0";
    return null;
  }
  if (!Number.isInteger(value) || !(SOIL_TYPES as readonly number[]).includes(value)) {
    return "soil type token must be 1 (sand), 2 (silty sand) or 3 (clay)";
  }
  return null;
}

export function validateScalarField(
  field: "vs30" | "dist_epi" | "wt_depth" | "dist_water",
  value: number,
): string | null {
  if (!finite(value)) return `${field} must be a finite number`;
  if (field === "vs30" && !(value > 0)) return "vs30 must be > 0";
  if (field !== "vs30" && value < 0) return `${field} must be >= 0`;
  return null;
}

export function validateSite(site: SitePayload): FieldError[] {
  const errors: FieldError[] = [];
  for (let i = 1; i <= N_LAYERS; i++) {
    const sptErr = validateLayerField("spt", site[`spt_${i}` as keyof SitePayload] as number);
    if (sptErr) errors.push({ field: `spt_${i}`, message: sptErr });
    const soilErr = validateLayerField("soil", site[`soil_${i}` as keyof SitePayload] as number);
    if (soilErr) errors.push({ field: `soil_${i}`, message: soilErr });
  }
  for (const f of ["vs30", "dist_epi", "wt_depth", "dist_water"] as const) {
    const err = validateScalarField(f, site[f]);
    if (err) errors.push({ field: f, message: err });
  }
  return errors;
}

export const PGA_RANGE: [number, number] = [0, 1];
export const SPT_FACTOR_RANGE: [number, number] = [0.5, 3];

export function clampToRange(value: number, [lo, hi]: [number, number]): number {
  return Math.min(hi, Math.max(lo, value));
}
