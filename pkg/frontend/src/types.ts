// Shapes of the service payloads the console consumes.

export interface CriteriaDraft {
  mandatory_threshold: number;
  optional_threshold: number;
  force_include: string[];
  force_exclude: string[];
}

export interface SolverDraft {
  iterations: number;
  seed: number;
}

export interface PlanRequestBody {
  date: string;
  criteria: CriteriaDraft;
  solver_config: SolverDraft;
  model_tag: string;
}

export interface RouteEntry {
  vehicle_id: string;
  container_ids: string[];
  containers: number;
  distance_m: number;
  duration_s: number;
  load_kg: number;
}

export interface PlanDocument {
  plan_id: string;
  date: string;
  model_tag: string;
  selection: {
    mandatory: string[];
    optional: string[];
    excluded: string[];
    reasons: Record<string, string>;
  };
  fills: Record<string, number>;
  routes: RouteEntry[];
  unassigned: string[];
  fitness: number;
  totals: { containers: number; distance_m: number; duration_s: number; load_kg: number };
  averages: { distance_m: number; duration_s: number; load_kg: number };
}

export interface PlanListEntry {
  plan_id: string;
  date: string;
  model_tag: string;
}

export interface GeoFeature {
  type: "Feature";
  geometry: { type: "Point" | "LineString"; coordinates: number[] | number[][] };
  properties: Record<string, unknown>;
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: GeoFeature[];
}
