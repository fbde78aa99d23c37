// Thin typed client over fetch. The what-if console never computes model
// numbers itself; everything displayed comes from these calls.

import {
  ExplainResponse,
  HealthResponse,
  PredictRequest,
  PredictResponse,
  SensitivityRequest,
  SensitivityResponse,
} from "./types.js";

export interface ApiClientLike {
  predict(req: PredictRequest): Promise<PredictResponse>;
  explain(req: PredictRequest & { n_perms?: number; seed?: number }): Promise<ExplainResponse>;
  sensitivity(req: SensitivityRequest): Promise<SensitivityResponse>;
  motions(): Promise<string[]>;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly field: string | null = null,
  ) {
    super(message);
  }
}

async function postJson<T>(url: string, body: unknown): Promise<T> {
  const response = await fetch(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  const payload = await response.json();
  if (!response.ok) {
    throw new ApiError(payload?.error ?? `HTTP ${response.status}`, response.status, payload?.field ?? null);
  }
  return payload as T;
}

export class ApiClient implements ApiClientLike {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async health(): Promise<HealthResponse> {
    const response = await fetch(this.url("/health"));
    return (await response.json()) as HealthResponse;
  }

  async motions(): Promise<string[]> {
    const response = await fetch(this.url("/motions"));
    if (!response.ok) return [];
    const payload = await response.json();
    return payload.motions ?? [];
  }

  predict(req: PredictRequest): Promise<PredictResponse> {
    return postJson(this.url("/predict"), req);
  }

  explain(req: PredictRequest & { n_perms?: number; seed?: number }): Promise<ExplainResponse> {
    return postJson(this.url("/explain"), req);
  }

  sensitivity(req: SensitivityRequest): Promise<SensitivityResponse> {
    return postJson(this.url("/sensitivity"), req);
  }
}
