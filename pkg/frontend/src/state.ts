// View state and the replan queue. Criteria drafts are validated before any
// submission leaves the client; only one replan is ever in flight, later
// submissions wait for it.

import type { CriteriaDraft, PlanRequestBody } from "./types.js";

export interface ViewState {
  date: string;
  criteria: CriteriaDraft;
  modelTag: string;
  iterations: number;
  seed: number;
  activePlanId: string | null;
}

export function defaultCriteria(): CriteriaDraft {
  return {
    mandatory_threshold: 0.8,
    optional_threshold: 0.5,
    force_include: [],
    force_exclude: [],
  };
}

export function validateCriteria(draft: CriteriaDraft): string[] {
  const problems: string[] = [];
  const { mandatory_threshold: mand, optional_threshold: opt } = draft;
  if (!(opt >= 0 && mand >= opt && mand <= 1)) {
    problems.push("thresholds must satisfy 0 <= optional <= mandatory <= 1");
  }
  const include = new Set(draft.force_include);
  for (const id of draft.force_exclude) {
    if (include.has(id)) problems.push(`container ${id} forced both ways`);
  }
  return problems;
}

export function planRequest(state: ViewState): PlanRequestBody {
  const problems = validateCriteria(state.criteria);
  if (problems.length) throw new Error(problems.join("; "));
  return {
    date: state.date,
    criteria: {
      ...state.criteria,
      force_include: [...state.criteria.force_include].sort(),
      force_exclude: [...state.criteria.force_exclude].sort(),
    },
    solver_config: { iterations: state.iterations, seed: state.seed },
    model_tag: state.modelTag,
  };
}

export function parseIdList(text: string): string[] {
  return text
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
}

/** Serializes async submissions: one in flight, the rest queued in order. */
export class ReplanQueue {
  private chain: Promise<unknown> = Promise.resolve();
  private pending = 0;

  get inFlight(): number {
    return this.pending;
  }

  submit<T>(task: () => Promise<T>): Promise<T> {
    this.pending += 1;
    const run = this.chain.then(task).finally(() => {
      this.pending -= 1;
    });
    this.chain = run.catch(() => undefined);
    return run;
  }
}
