import { describe, expect, it } from "vitest";

import { fitViewport, mercator, scaleBar, toPixel } from "../src/geo.js";
import { formatDuration, metricsRows } from "../src/metrics.js";
import { buildRenderModel, CLASS_COLORS } from "../src/render.js";
import type { FeatureCollection, PlanDocument } from "../src/types.js";

function point(id: string, lon: number, lat: number, selection: string,
               fill: number | null, smallOnly = false) {
  return {
    type: "Feature" as const,
    geometry: { type: "Point" as const, coordinates: [lon, lat] },
    properties: { container_id: id, selection, fill, small_only: smallOnly },
  };
}

function line(vehicleId: string, coords: number[][], containers: number) {
  return {
    type: "Feature" as const,
    geometry: { type: "LineString" as const, coordinates: coords },
    properties: {
      vehicle_id: vehicleId,
      containers,
      distance_m: 1000,
      duration_s: 600,
      load_kg: 100,
    },
  };
}

const DEPOT = [-4.42, 36.72];

function twoRouteFixture(): FeatureCollection {
  return {
    type: "FeatureCollection",
    features: [
      point("a", -4.425, 36.721, "mandatory", 0.93, true),
      point("b", -4.418, 36.722, "mandatory", 0.85),
      point("c", -4.417, 36.719, "optional", 0.6),
      point("d", -4.423, 36.718, "excluded", 0.2),
      point("e", -4.421, 36.724, "excluded", null),
      line("small-truck", [DEPOT, [-4.425, 36.721], [-4.418, 36.722], DEPOT], 2),
      line("big-truck", [DEPOT, [-4.417, 36.719], DEPOT], 1),
    ],
  };
}

describe("buildRenderModel", () => {
  it("renders one polyline per route and one marker per container", () => {
    const model = buildRenderModel(twoRouteFixture(), 800, 600);
    expect(model.polylines.length).toBe(2);
    expect(model.markers.length).toBe(5);
  });

  it("keeps polyline vertex order identical to the geojson", () => {
    const model = buildRenderModel(twoRouteFixture(), 800, 600);
    const first = model.polylines[0];
    expect(first.vehicleId).toBe("small-truck");
    expect(first.px.length).toBe(4); // depot + 2 containers + depot
    const expected = (twoRouteFixture().features[5].geometry.coordinates as number[][])
      .map(([lon, lat]) => toPixel(model.viewport, lon, lat));
    expect(first.px).toEqual(expected);
  });

  it("marks containers above the mandatory threshold with the alert style", () => {
    const model = buildRenderModel(twoRouteFixture(), 800, 600, 0.8);
    const byId = new Map(model.markers.map((m) => [m.containerId, m]));
    expect(byId.get("a")!.alert).toBe(true);
    expect(byId.get("a")!.color).toBe(CLASS_COLORS.mandatory);
    expect(byId.get("c")!.alert).toBe(false);
    expect(byId.get("e")!.alert).toBe(false); // no data, never alerting
  });

  it("gives distinct colors to the two routes", () => {
    const model = buildRenderModel(twoRouteFixture(), 800, 600);
    expect(model.polylines[0].color).not.toBe(model.polylines[1].color);
  });

  it("fits every marker inside the canvas", () => {
    const model = buildRenderModel(twoRouteFixture(), 800, 600);
    for (const m of model.markers) {
      expect(m.px[0]).toBeGreaterThanOrEqual(0);
      expect(m.px[0]).toBeLessThanOrEqual(800);
      expect(m.px[1]).toBeGreaterThanOrEqual(0);
      expect(m.px[1]).toBeLessThanOrEqual(600);
    }
  });
});

describe("geo", () => {
  it("mercator is monotone in longitude and latitude", () => {
    const [x1] = mercator(-10, 0);
    const [x2] = mercator(10, 0);
    expect(x2).toBeGreaterThan(x1);
    const [, y1] = mercator(0, 10);
    const [, y2] = mercator(0, -10);
    expect(y2).toBeGreaterThan(y1); // y grows downward
  });

  it("viewport centers a single point", () => {
    const view = fitViewport([[-4.42, 36.72]], 400, 400);
    const [px, py] = toPixel(view, -4.42, 36.72);
    expect(px).toBeCloseTo(200, 0);
    expect(py).toBeCloseTo(200, 0);
  });

  it("scale bar picks a round number no wider than the limit", () => {
    const view = fitViewport(
      [[-4.43, 36.71], [-4.41, 36.73]], 800, 600);
    const bar = scaleBar(view, 36.72, 120);
    expect([10, 20, 50, 100, 200, 500, 1000, 2000, 5000]).toContain(bar.meters);
    expect(bar.px).toBeLessThanOrEqual(121);
  });
});

describe("metrics", () => {
  const doc: PlanDocument = {
    plan_id: "p1",
    date: "2018-02-25",
    model_tag: "gp",
    selection: { mandatory: [], optional: [], excluded: [], reasons: {} },
    fills: {},
    routes: [
      { vehicle_id: "small-truck", container_ids: ["a", "b"], containers: 2,
        distance_m: 3000, duration_s: 1800, load_kg: 120 },
      { vehicle_id: "big-truck", container_ids: ["c"], containers: 1,
        distance_m: 1000, duration_s: 700, load_kg: 60 },
    ],
    unassigned: [],
    fitness: 4000,
    totals: { containers: 3, distance_m: 4000, duration_s: 2500, load_kg: 180 },
    averages: { distance_m: 4000 / 3, duration_s: 2500 / 3, load_kg: 60 },
  };

  it("emits per-truck, total and average rows", () => {
    const rows = metricsRows(doc);
    expect(rows.map((r) => r.label)).toEqual(
      ["small-truck", "big-truck", "total", "average"]);
    expect(rows[2].distanceM).toBe(4000);
    expect(rows[3].containers).toBeNull();
  });

  it("formats durations as hours and minutes", () => {
    expect(formatDuration(3720)).toBe("1h 02m");
    expect(formatDuration(95)).toBe("1m 35s");
  });
});
