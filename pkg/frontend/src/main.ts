// DOM wiring: a pure view over ScenarioStore state. All numbers shown come
// from service responses; this file only formats and forwards events.

import { ApiClient } from "./api.js";
import { ScenarioStore, ScenarioState } from "./state.js";
import { buildWaterfall, renderWaterfallHtml, round3 } from "./waterfall.js";
import { buildSweep, renderSweepSvg } from "./sweep.js";
import { N_LAYERS } from "./types.js";

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? "http://127.0.0.1:8000";
}

const api = new ApiClient(apiBase());

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function render(state: ScenarioState): void {
  const gauge = el<HTMLDivElement>("gauge");
  if (state.lastSweep) {
    const model = buildSweep(state.lastSweep, state.pgaFactor);
    el<HTMLDivElement>("sweep").innerHTML = renderSweepSvg(model);
    if (model.current) gauge.textContent = round3(model.current.p);
  } else if (state.lastPrediction) {
    gauge.textContent = round3(state.lastPrediction.p_liq);
  }
  gauge.classList.toggle(
    "liquefied",
    state.lastPrediction !== null && state.lastPrediction.p_liq > 0.5,
  );
  if (state.lastAttribution) {
    el<HTMLDivElement>("waterfall").innerHTML = renderWaterfallHtml(buildWaterfall(state.lastAttribution));
  }
  const toast = el<HTMLDivElement>("toast");
  toast.textContent = state.toast ?? "";
  toast.classList.toggle("visible", state.toast !== null);
  for (const [field, message] of Object.entries(state.fieldErrors)) {
    const cell = document.querySelector(`[data-error-for="${field}"]`);
    if (cell) cell.textContent = message;
  }
  document.querySelectorAll("[data-error-for]").forEach((node) => {
    const field = (node as HTMLElement).dataset.errorFor!;
    if (!(field in state.fieldErrors)) node.textContent = "";
  });
  el<HTMLSpanElement>("pga-value").textContent = state.pgaFactor.toFixed(2);
  el<HTMLSpanElement>("spt-value").textContent = state.sptFactor.toFixed(2);
}

const store = new ScenarioStore(api, render);

function buildProfileTable(): void {
  const body = el<HTMLTableSectionElement>("profile-body");
  for (let layer = 1; layer <= N_LAYERS; layer++) {
    const row = document.createElement("tr");
    row.innerHTML =
      `<td>${layer} m</td>` +
      `<td><input type="number" step="1" min="0" value="10" data-layer="${layer}" data-field="spt"></td>` +
      `<td><select data-layer="${layer}" data-field="soil">` +
      `<option value="1" selected>sand</option><option value="2">silty sand</option><option value="3">clay</option>` +
      `</select></td>` +
      `<td class="field-error" data-error-for="spt_${layer}"></td>`;
    body.appendChild(row);
  }
  body.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement | HTMLSelectElement;
    const layer = Number(target.dataset.layer);
    const field = target.dataset.field as "spt" | "soil";
    if (!layer || !field) return;
    store.editProfile(layer, field, Number(target.value));
  });
}

function wireScalars(): void {
  for (const field of ["vs30", "dist_epi", "wt_depth", "dist_water"] as const) {
    el<HTMLInputElement>(`input-${field}`).addEventListener("change", (event) => {
      store.editScalar(field, Number((event.target as HTMLInputElement).value));
    });
  }
}

function wireSliders(): void {
  const pga = el<HTMLInputElement>("slider-pga");
  const spt = el<HTMLInputElement>("slider-spt");
  const update = () => store.runWhatIf(Number(pga.value), Number(spt.value));
  pga.addEventListener("input", update);
  spt.addEventListener("input", update);
}

function wireMotion(): void {
  const select = el<HTMLSelectElement>("motion-select");
  select.addEventListener("change", () => {
    if (select.value) store.selectMotion({ motion_id: select.value });
  });
  el<HTMLButtonElement>("motion-paste-apply").addEventListener("click", () => {
    // raw CSV paste: header t,a then rows; parsing only, no client-side math
    const text = el<HTMLTextAreaElement>("motion-paste").value.trim();
    const lines = text.split(/\r?\n/);
    if (lines.length < 3 || lines[0].trim() !== "t,a") {
      store.state.toast = "paste a CSV with header t,a and at least 2 rows";
      render(store.state);
      return;
    }
    const times: number[] = [];
    const accels: number[] = [];
    for (const line of lines.slice(1)) {
      const [t, a] = line.split(",").map(Number);
      if (!Number.isFinite(t) || !Number.isFinite(a)) {
        store.state.toast = `bad CSV row: ${line}`;
        render(store.state);
        return;
      }
      times.push(t);
      accels.push(a);
    }
    store.selectMotion({ samples: accels, dt: times[1] - times[0] });
  });
  el<HTMLButtonElement>("explain-button").addEventListener("click", () => void store.fireExplain());
}

async function init(): Promise<void> {
  buildProfileTable();
  wireScalars();
  wireSliders();
  wireMotion();
  try {
    const ids = await api.motions();
    const select = el<HTMLSelectElement>("motion-select");
    for (const id of ids) {
      const option = document.createElement("option");
      option.value = id;
      option.textContent = id;
      select.appendChild(option);
    }
    if (ids.length) {
      select.value = ids[0];
      store.selectMotion({ motion_id: ids[0] });
      store.runWhatIf(1.0, 1.0);
    }
  } catch {
    store.state.toast = "service unreachable; set ?api=http://host:port";
    render(store.state);
  }
}

void init();
