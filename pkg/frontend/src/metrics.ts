// Metrics panel rows: per truck, totals, per-container averages.

import type { PlanDocument } from "./types.js";

export interface MetricsRow {
  label: string;
  containers: number | null;
  durationS: number;
  distanceM: number;
  loadKg: number;
}

export function metricsRows(doc: PlanDocument): MetricsRow[] {
  const rows: MetricsRow[] = doc.routes.map((r) => ({
    label: r.vehicle_id,
    containers: r.containers,
    durationS: r.duration_s,
    distanceM: r.distance_m,
    loadKg: r.load_kg,
  }));
  rows.push({
    label: "total",
    containers: doc.totals.containers,
    durationS: doc.totals.duration_s,
    distanceM: doc.totals.distance_m,
    loadKg: doc.totals.load_kg,
  });
  rows.push({
    label: "average",
    containers: null,
    durationS: doc.averages.duration_s,
    distanceM: doc.averages.distance_m,
    loadKg: doc.averages.load_kg,
  });
  return rows;
}

export function formatDuration(seconds: number): string {
  const s = Math.round(seconds);
  const h = Math.floor(s / 3600);
  const m = Math.floor((s % 3600) / 60);
  return h > 0 ? `${h}h ${m.toString().padStart(2, "0")}m` : `${m}m ${s % 60}s`;
}

export function formatNumber(x: number, digits = 0): string {
  return x.toLocaleString("en-US", {
    minimumFractionDigits: digits,
    maximumFractionDigits: digits,
  });
}
