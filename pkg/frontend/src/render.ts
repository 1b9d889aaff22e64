// Pure translation of a plan's GeoJSON into drawable markers and polylines.
// The painter draws exactly this model, so tests can assert on it without a
// browser. Marker styling follows the selection class, with the alert style
// for containers whose forecast fill exceeds the mandatory threshold.

import { fitViewport, toPixel, Viewport } from "./geo.js";
import type { FeatureCollection, GeoFeature } from "./types.js";

export const CLASS_COLORS: Record<string, string> = {
  mandatory: "#d62828", // alert: must be collected
  optional: "#f77f00",
  excluded: "#8d99ae",
};

export const ROUTE_COLORS = ["#d62828", "#1d3557", "#2a9d8f", "#7209b7", "#b5838d"];

export interface Marker {
  containerId: string;
  px: [number, number];
  lonLat: [number, number];
  selection: string;
  fill: number | null;
  color: string;
  alert: boolean;
  smallOnly: boolean;
}

export interface Polyline {
  vehicleId: string;
  px: Array<[number, number]>;
  color: string;
  distanceM: number;
  durationS: number;
  loadKg: number;
  containers: number;
}

export interface RenderModel {
  viewport: Viewport;
  markers: Marker[];
  polylines: Polyline[];
}

function isPoint(f: GeoFeature): boolean {
  return f.geometry.type === "Point";
}

export function buildRenderModel(
  geojson: FeatureCollection,
  width: number,
  height: number,
  mandatoryThreshold = 0.8,
): RenderModel {
  const coords: Array<[number, number]> = [];
  for (const f of geojson.features) {
    if (isPoint(f)) {
      coords.push(f.geometry.coordinates as [number, number]);
    } else {
      for (const c of f.geometry.coordinates as number[][]) {
        coords.push([c[0], c[1]]);
      }
    }
  }
  const viewport = fitViewport(coords, width, height);

  const markers: Marker[] = [];
  const polylines: Polyline[] = [];
  let routeIndex = 0;
  for (const f of geojson.features) {
    if (isPoint(f)) {
      const [lon, lat] = f.geometry.coordinates as [number, number];
      const selection = String(f.properties.selection ?? "excluded");
      const fill = (f.properties.fill ?? null) as number | null;
      markers.push({
        containerId: String(f.properties.container_id),
        px: toPixel(viewport, lon, lat),
        lonLat: [lon, lat],
        selection,
        fill,
        color: CLASS_COLORS[selection] ?? CLASS_COLORS.excluded,
        alert: fill !== null && fill > mandatoryThreshold,
        smallOnly: Boolean(f.properties.small_only),
      });
    } else {
      const pts = (f.geometry.coordinates as number[][]).map(
        (c) => toPixel(viewport, c[0], c[1]),
      );
      polylines.push({
        vehicleId: String(f.properties.vehicle_id),
        px: pts,
        color: ROUTE_COLORS[routeIndex % ROUTE_COLORS.length],
        distanceM: Number(f.properties.distance_m ?? 0),
        durationS: Number(f.properties.duration_s ?? 0),
        loadKg: Number(f.properties.load_kg ?? 0),
        containers: Number(f.properties.containers ?? 0),
      });
      routeIndex += 1;
    }
  }
  return { viewport, markers, polylines };
}
