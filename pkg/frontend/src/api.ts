// Thin typed client over the planning service. The console never mutates
// plan state locally; everything it shows came from these calls.

import type { FeatureCollection, PlanDocument, PlanListEntry, PlanRequestBody } from "./types.js";

export class ServiceError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function reason(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    return body.reason ?? body.detail ?? resp.statusText;
  } catch {
    return resp.statusText;
  }
}

export class ApiClient {
  constructor(private baseUrl: string) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) throw new ServiceError(resp.status, await reason(resp));
    return resp.json() as Promise<T>;
  }

  containers(): Promise<Array<Record<string, unknown>>> {
    return this.get("/containers");
  }

  plans(): Promise<PlanListEntry[]> {
    return this.get("/plans");
  }

  plan(planId: string): Promise<PlanDocument> {
    return this.get(`/plans/${planId}`);
  }

  geojson(planId: string): Promise<FeatureCollection> {
    return this.get(`/plans/${planId}/geojson`);
  }

  async createPlan(body: PlanRequestBody): Promise<string> {
    const resp = await fetch(this.baseUrl + "/plans", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw new ServiceError(resp.status, await reason(resp));
    const created = (await resp.json()) as { plan_id: string };
    return created.plan_id;
  }
}
