// Console wiring: load plans, adjust criteria, trigger replans, hand the
// render model to the canvas painter. All plan state comes from the service.

import { ApiClient, ServiceError } from "./api.js";
import { paint, TileConfig } from "./map.js";
import { formatDuration, formatNumber, metricsRows } from "./metrics.js";
import { buildRenderModel } from "./render.js";
import { defaultCriteria, parseIdList, planRequest, ReplanQueue, validateCriteria, ViewState } from "./state.js";
import type { PlanDocument } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const state: ViewState = {
  date: new Date().toISOString().slice(0, 10),
  criteria: defaultCriteria(),
  modelTag: "gp",
  iterations: 10_000,
  seed: 0,
  activePlanId: null,
};

const queue = new ReplanQueue();
let api = new ApiClient(readServiceUrl());
let tiles: TileConfig | null = null;

function readServiceUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("service") ?? "http://127.0.0.1:8000";
}

function banner(message: string, isError: boolean): void {
  const el = $("banner");
  el.textContent = message;
  el.className = isError ? "banner error" : "banner";
  el.hidden = message === "";
}

function criteriaFromForm(): void {
  state.criteria = {
    mandatory_threshold: Number(($("mandatory") as HTMLInputElement).value),
    optional_threshold: Number(($("optional") as HTMLInputElement).value),
    force_include: parseIdList(($("force-include") as HTMLInputElement).value),
    force_exclude: parseIdList(($("force-exclude") as HTMLInputElement).value),
  };
  state.date = ($("date") as HTMLInputElement).value;
  state.modelTag = ($("model") as HTMLSelectElement).value;
  state.iterations = Number(($("iterations") as HTMLInputElement).value);
  state.seed = Number(($("seed") as HTMLInputElement).value);
}

async function refreshHistory(): Promise<void> {
  const plans = await api.plans();
  const list = $("history");
  list.innerHTML = "";
  for (const p of plans.slice().reverse()) {
    const item = document.createElement("li");
    const link = document.createElement("a");
    link.textContent = `${p.date} · ${p.model_tag} · ${p.plan_id.slice(0, 8)}`;
    link.href = "#";
    link.onclick = (ev) => {
      ev.preventDefault();
      void loadPlan(p.plan_id);
    };
    item.appendChild(link);
    if (p.plan_id === state.activePlanId) item.className = "active";
    list.appendChild(item);
  }
}

function renderMetrics(doc: PlanDocument): void {
  const tbody = $("metrics-body");
  tbody.innerHTML = "";
  for (const row of metricsRows(doc)) {
    const tr = document.createElement("tr");
    tr.innerHTML = [
      `<td>${row.label}</td>`,
      `<td>${row.containers ?? "–"}</td>`,
      `<td>${formatDuration(row.durationS)}</td>`,
      `<td>${formatNumber(row.distanceM)} m</td>`,
      `<td>${formatNumber(row.loadKg)} kg</td>`,
    ].join("");
    tbody.appendChild(tr);
  }
  $("plan-meta").textContent =
    `plan ${doc.plan_id.slice(0, 12)} · ${doc.date} · ${doc.model_tag} · ` +
    `${doc.unassigned.length} unassigned · fitness ${formatNumber(doc.fitness)}`;
}

export async function loadPlan(planId: string): Promise<void> {
  try {
    const [doc, geojson] = await Promise.all([api.plan(planId), api.geojson(planId)]);
    state.activePlanId = planId;
    const canvas = $("map") as HTMLCanvasElement;
    const box = canvas.parentElement!.getBoundingClientRect();
    const model = buildRenderModel(geojson, Math.max(480, box.width),
                                   Math.max(360, box.height),
                                   state.criteria.mandatory_threshold);
    const refLat = model.markers[0]?.lonLat[1] ?? 0;
    paint(canvas, model, refLat, tiles);
    renderMetrics(doc);
    banner("", false);
    await refreshHistory();
  } catch (err) {
    if (err instanceof ServiceError && err.status === 404) {
      banner(`unknown plan ${planId}`, true);
    } else {
      banner(String(err), true);
    }
  }
}

async function submitReplan(): Promise<void> {
  criteriaFromForm();
  const problems = validateCriteria(state.criteria);
  if (problems.length) {
    banner(problems.join("; "), true);
    return;
  }
  const body = planRequest(state);
  banner("planning…", false);
  try {
    const planId = await queue.submit(() => api.createPlan(body));
    await loadPlan(planId);
  } catch (err) {
    banner(err instanceof ServiceError ? err.message : String(err), true);
  }
}

function wire(): void {
  api = new ApiClient(readServiceUrl());
  const tileUrl = new URLSearchParams(window.location.search).get("tiles");
  tiles = tileUrl ? { urlTemplate: tileUrl, zoom: 14 } : null;
  ($("date") as HTMLInputElement).value = state.date;
  $("replan").onclick = () => void submitReplan();
  $("toggle-metrics").onclick = () => {
    $("metrics-panel").classList.toggle("collapsed");
  };
  void refreshHistory();
}

if (typeof document !== "undefined" && document.getElementById("map")) {
  wire();
}
