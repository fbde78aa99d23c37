// Scenario state machine: profile edits debounce into /predict, slider
// moves debounce into an 11-point /sensitivity sweep, and every response
// passes a sequence check so stale replies can never clobber newer state.

import { ApiClientLike } from "./api.js";
import { Debouncer } from "./debounce.js";
import { RequestSequencer } from "./sequence.js";
import {
  ExplainResponse,
  MotionPayload,
  PredictResponse,
  SensitivityResponse,
  SitePayload,
} from "./types.js";
import {
  clampToRange,
  FieldError,
  PGA_RANGE,
  SPT_FACTOR_RANGE,
  validateLayerField,
  validateScalarField,
} from "./validate.js";

export const DEBOUNCE_MS = 300;
export const SWEEP_POINTS = 11;

export interface ScenarioState {
  site: SitePayload;
  motion: MotionPayload;
  pgaFactor: number;
  sptFactor: number;
  lastPrediction: PredictResponse | null;
  lastAttribution: ExplainResponse | null;
  lastSweep: SensitivityResponse | null;
  fieldErrors: Record<string, string>;
  toast: string | null;
  busy: { predict: boolean; explain: boolean; sensitivity: boolean };
}

export function defaultSite(): SitePayload {
  const site = { site_id: "scenario", label: 0 } as Record<string, number | string>;
  for (let i = 1; i <= 10; i++) {
    site[`spt_${i}`] = 10;
    site[`soil_${i}`] = 1;
  }
  site.vs30 = 200;
  site.dist_epi = 10;
  site.wt_depth = 2;
  site.dist_water = 5;
  site.motion_id = "";
  return site as unknown as SitePayload;
}

export class ScenarioStore {
  state: ScenarioState;
  private readonly predictDebounce = new Debouncer(DEBOUNCE_MS);
  private readonly sweepDebounce = new Debouncer(DEBOUNCE_MS);
  private readonly predictSeq = new RequestSequencer();
  private readonly explainSeq = new RequestSequencer();
  private readonly sweepSeq = new RequestSequencer();

  constructor(
    private readonly api: ApiClientLike,
    private readonly onChange: (state: ScenarioState) => void = () => {},
  ) {
    this.state = {
      site: defaultSite(),
      motion: { motion_id: undefined },
      pgaFactor: 1.0,
      sptFactor: 1.0,
      lastPrediction: null,
      lastAttribution: null,
      lastSweep: null,
      fieldErrors: {},
      toast: null,
      busy: { predict: false, explain: false, sensitivity: false },
    };
  }

  private emit(): void {
    this.onChange(this.state);
  }

  private hasMotion(): boolean {
    const m = this.state.motion;
    return m.motion_id !== undefined || (m.samples !== undefined && m.dt !== undefined);
  }

  /** Edit one layer cell; invalid values produce an inline error and no call. */
  editProfile(layer: number, field: "spt" | "soil", value: number): FieldError | null {
    const name = `${field}_${layer}`;
    const message = validateLayerField(field, value);
    if (message) {
      this.state.fieldErrors[name] = message;
      this.emit();
      return { field: name, message };
    }
    delete this.state.fieldErrors[name];
    (this.state.site as unknown as Record<string, number>)[name] = value;
    this.schedulePredict();
    this.emit();
    return null;
  }

  editScalar(field: "vs30" | "dist_epi" | "wt_depth" | "dist_water", value: number): FieldError | null {
    const message = validateScalarField(field, value);
    if (message) {
      this.state.fieldErrors[field] = message;
      this.emit();
      return { field, message };
    }
    delete this.state.fieldErrors[field];
    this.state.site[field] = value;
    this.schedulePredict();
    this.emit();
    return null;
  }

  selectMotion(motion: MotionPayload): void {
    this.state.motion = motion;
    this.schedulePredict();
    this.emit();
  }

  /** Move the what-if sliders; triggers a debounced 11-point PGA sweep. */
  runWhatIf(pgaFactor: number, sptFactor: number): void {
    this.state.pgaFactor = clampToRange(pgaFactor, PGA_RANGE);
    this.state.sptFactor = clampToRange(sptFactor, SPT_FACTOR_RANGE);
    this.scheduleSweep();
    this.emit();
  }

  private schedulePredict(): void {
    if (!this.hasMotion()) return;
    this.predictDebounce.schedule(() => void this.firePredict());
  }

  private scheduleSweep(): void {
    if (!this.hasMotion()) return;
    this.sweepDebounce.schedule(() => void this.fireSweep());
  }

  async firePredict(): Promise<void> {
    const seq = this.predictSeq.issue();
    this.state.busy.predict = true;
    this.emit();
    try {
      const result = await this.api.predict({ site: this.state.site, motion: this.state.motion });
      if (!this.predictSeq.isCurrent(seq)) return; // superseded by a newer edit
      this.state.lastPrediction = result;
      this.state.toast = null;
    } catch (err) {
      if (!this.predictSeq.isCurrent(seq)) return;
      this.state.toast = `prediction failed: ${(err as Error).message}`;
    } finally {
      if (this.predictSeq.isCurrent(seq)) {
        this.state.busy.predict = false;
        this.emit();
      }
    }
  }

  async fireSweep(): Promise<void> {
    const seq = this.sweepSeq.issue();
    this.state.busy.sensitivity = true;
    this.emit();
    const pga = Array.from({ length: SWEEP_POINTS }, (_, i) => i / (SWEEP_POINTS - 1));
    try {
      const result = await this.api.sensitivity({
        site: this.state.site,
        motion: this.state.motion,
        pga_factors: pga,
        spt_factors: [this.state.sptFactor],
      });
      if (!this.sweepSeq.isCurrent(seq)) return;
      this.state.lastSweep = result;
      this.state.toast = null;
    } catch (err) {
      if (!this.sweepSeq.isCurrent(seq)) return;
      // non-blocking: the last good chart stays
      this.state.toast = `sensitivity failed: ${(err as Error).message}`;
    } finally {
      if (this.sweepSeq.isCurrent(seq)) {
        this.state.busy.sensitivity = false;
        this.emit();
      }
    }
  }

  async fireExplain(nPerms = 200): Promise<void> {
    if (!this.hasMotion()) return;
    const seq = this.explainSeq.issue();
    this.state.busy.explain = true;
    this.emit();
    try {
      const result = await this.api.explain({
        site: this.state.site,
        motion: this.state.motion,
        n_perms: nPerms,
      });
      if (!this.explainSeq.isCurrent(seq)) return;
      this.state.lastAttribution = result;
      this.state.toast = null;
    } catch (err) {
      if (!this.explainSeq.isCurrent(seq)) return;
      this.state.toast = `explanation failed: ${(err as Error).message}`;
    } finally {
      if (this.explainSeq.isCurrent(seq)) {
        this.state.busy.explain = false;
        this.emit();
      }
    }
  }
}
