// JSON contracts of the prediction service; field names mirror the sites CSV.

export interface SitePayload {
  site_id: string;
  label: number;
  spt_1: number; spt_2: number; spt_3: number; spt_4: number; spt_5: number;
  spt_6: number; spt_7: number; spt_8: number; spt_9: number; spt_10: number;
  soil_1: number; soil_2: number; soil_3: number; soil_4: number; soil_5: number;
  soil_6: number; soil_7: number; soil_8: number; soil_9: number; soil_10: number;
  vs30: number;
  dist_epi: number;
  wt_depth: number;
  dist_water: number;
  motion_id: string;
}

export interface MotionPayload {
  samples?: number[];
  dt?: number;
  motion_id?: string;
}

export interface PredictRequest {
  site: SitePayload;
  motion: MotionPayload;
}

export interface PredictResponse {
  p_liq: number;
  p_noliq: number;
  model_version: string;
}

export interface GroupPhi {
  name: string;
  phi: number;
  std_err: number;
}

export interface ExplainResponse {
  base_value: number;
  fx: number;
  n_samples: number;
  groups: GroupPhi[];
}

export interface SensitivityRequest extends PredictRequest {
  pga_factors: number[];
  spt_factors: number[];
}

export interface SensitivityResponse {
  pga_factors: number[];
  spt_factors: number[];
  p: number[][];
}

export interface HealthResponse {
  status: string;
  model_version: string;
}

export const N_LAYERS = 10;
export const SOIL_TYPES = [1, 2, 3] as const;
