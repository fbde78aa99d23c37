// Deferred-promise mock of the service client; tests resolve responses by
// hand to exercise ordering and failure paths deterministically.

import { ApiClientLike } from "../src/api.js";
import {
  ExplainResponse,
  PredictRequest,
  PredictResponse,
  SensitivityRequest,
  SensitivityResponse,
} from "../src/types.js";

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (err: Error) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (err: Error) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

export class MockApi implements ApiClientLike {
  predictCalls: PredictRequest[] = [];
  predictDeferreds: Deferred<PredictResponse>[] = [];
  explainCalls: PredictRequest[] = [];
  explainDeferreds: Deferred<ExplainResponse>[] = [];
  sensitivityCalls: SensitivityRequest[] = [];
  sensitivityDeferreds: Deferred<SensitivityResponse>[] = [];

  predict(req: PredictRequest): Promise<PredictResponse> {
    this.predictCalls.push(structuredClone(req));
    const d = deferred<PredictResponse>();
    this.predictDeferreds.push(d);
    return d.promise;
  }

  explain(req: PredictRequest): Promise<ExplainResponse> {
    this.explainCalls.push(structuredClone(req));
    const d = deferred<ExplainResponse>();
    this.explainDeferreds.push(d);
    return d.promise;
  }

  sensitivity(req: SensitivityRequest): Promise<SensitivityResponse> {
    this.sensitivityCalls.push(structuredClone(req));
    const d = deferred<SensitivityResponse>();
    this.sensitivityDeferreds.push(d);
    return d.promise;
  }

  motions(): Promise<string[]> {
    return Promise.resolve(["eq_a", "eq_b"]);
  }
}

export function prediction(pLiq: number): PredictResponse {
  return { p_liq: pLiq, p_noliq: 1 - pLiq, model_version: "lqtf1-test" };
}

export function sweepResponse(pAtOne: number): SensitivityResponse {
  const pga = Array.from({ length: 11 }, (_, i) => i / 10);
  return {
    pga_factors: pga,
    spt_factors: [1.0],
    p: pga.map((f) => [f === 1.0 ? pAtOne : f * pAtOne]),
  };
}
