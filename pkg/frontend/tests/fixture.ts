/** Hand-built schema-valid documents for unit tests. */

import { Report } from "../src/types";

export const LABELS = ["county=same,floor=different", "county=different,floor=same"];

export function fixtureReport(): Report {
  const mk = (
    id: number,
    cluster: number,
    shrinkage: number,
    ssbf: number,
    u: number,
    b0: number,
    b1: number,
  ) => ({
    id,
    cluster,
    cluster_size: 2,
    shrinkage,
    pooling: 1 - shrinkage,
    ssbf,
    fitted: 0.5 + 0.1 * id,
    groups: {
      [LABELS[0]]: { borrowing: b0, pssbf: b0 * b0, count: 1 },
      [LABELS[1]]: { borrowing: b1, pssbf: b1 * b1, count: 2 },
    },
    covariates: { u, county: `c${cluster}`, y: 1.0 + 0.2 * id },
  });
  return {
    schema_version: 1,
    meta: {
      n_obs: 4,
      n_clusters: 2,
      response: "y",
      offset: null,
      variance_mode: null,
      variance: { phi_scale: 1.0, sigma2: 0.8, source: "given" },
      rules: [],
      group_labels: [...LABELS],
      condition_on: [],
    },
    records: [
      mk(0, 0, 0.42, 0.21, -1.0, 0.3, 0.15),
      mk(1, 0, 0.44, 0.2, -0.5, 0.28, 0.14),
      mk(2, 1, 0.51, 0.16, 0.5, 0.22, 0.12),
      mk(3, 1, 0.55, 0.12, 1.0, 0.2, 0.1),
    ],
    influence: {
      points: [0],
      impact: {
        [LABELS[0]]: { min: 0.2, q1: 0.22, median: 0.25, q3: 0.28, max: 0.3, n: 4 },
        [LABELS[1]]: { min: 0.1, q1: 0.11, median: 0.125, q3: 0.14, max: 0.15, n: 8 },
      },
      cooks: [0.02, 0.01],
      rvsi: [0.005, 0.002],
      pena: [0.3, 0.2],
    },
    grid: {
      x_axis: "u",
      y_axis: "ssbf",
      value: "shrinkage",
      bandwidth: [0.4, 0.05],
      x: [-1.0, 0.0, 1.0],
      y: [0.12, 0.17, 0.21],
      surface: [
        [0.42, 0.45, 0.5],
        [0.43, 0.46, 0.52],
        [null, 0.48, 0.55],
      ],
    },
  };
}

/** What a recompute without `deleted` would return: kept rows in order,
 * renumbered from zero, every factor nudged by a known offset. */
export function recomputedWithout(deleted: number[], offset = 0.01): Report {
  const base = fixtureReport();
  const drop = new Set(deleted);
  const kept = base.records.filter((r) => !drop.has(r.id));
  return {
    ...base,
    meta: { ...base.meta, n_obs: kept.length },
    records: kept.map((r, i) => ({
      ...r,
      id: i,
      shrinkage: r.shrinkage + offset,
      pooling: r.pooling - offset,
      ssbf: r.ssbf + 2 * offset,
    })),
    influence: null,
    grid: null,
  };
}
