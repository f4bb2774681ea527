/** Types mirroring the report JSON document (schema_version 1). */

export const SCHEMA_VERSION = 1;

export interface GroupFactors {
  borrowing: number;
  pssbf: number;
  count: number;
}

export interface ObservationRecord {
  id: number;
  cluster: number;
  cluster_size: number;
  shrinkage: number;
  pooling: number;
  ssbf: number;
  fitted: number;
  groups: Record<string, GroupFactors>;
  covariates: Record<string, number | string | null>;
}

export interface BoxStats {
  min: number;
  q1: number;
  median: number;
  q3: number;
  max: number;
  n: number;
}

export interface InfluenceSection {
  points: number[];
  impact: Record<string, BoxStats>;
  cooks?: (number | null)[] | null;
  rvsi?: (number | null)[] | null;
  pena?: (number | null)[] | null;
  note?: string;
}

export interface GridSection {
  x_axis: string;
  y_axis: string;
  value: string;
  bandwidth: [number, number];
  x: number[];
  y: number[];
  /** Indexed [iy][ix]; row 0 is the bottom of the y axis. */
  surface: (number | null)[][];
}

export interface ReportMeta {
  n_obs: number;
  n_clusters: number;
  response: string;
  offset: string | null;
  variance_mode: string | null;
  variance: Record<string, unknown>;
  rules: Record<string, unknown>[];
  group_labels: string[];
  condition_on: string[];
}

export interface Report {
  schema_version: number;
  meta: ReportMeta;
  records: ObservationRecord[];
  influence: InfluenceSection | null;
  grid: GridSection | null;
}

/** The served document declares a schema this client does not speak. */
export class SchemaMismatch extends Error {
  constructor(readonly expected: number, readonly found: unknown) {
    super(`expected schema_version ${expected}, found ${String(found)}`);
    this.name = "SchemaMismatch";
  }
}

/**
 * Validate a served document just enough to render it safely.
 *
 * Record ids double as positions in the records array (the server emits
 * them that way, including after a recompute), which keeps every lookup
 * an index instead of a scan; that invariant is checked here.
 */
export function parseReport(doc: unknown): Report {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new Error("report must be a JSON object");
  }
  const d = doc as Record<string, unknown>;
  if (d.schema_version !== SCHEMA_VERSION) {
    throw new SchemaMismatch(SCHEMA_VERSION, d.schema_version);
  }
  if (!Array.isArray(d.records)) {
    throw new Error("report has no records array");
  }
  const meta = d.meta as ReportMeta | undefined;
  if (!meta || !Array.isArray(meta.group_labels)) {
    throw new Error("report meta is missing group_labels");
  }
  d.records.forEach((r, i) => {
    if (typeof r !== "object" || r === null || (r as ObservationRecord).id !== i) {
      throw new Error(`record ${i} is missing or out of order`);
    }
  });
  return d as unknown as Report;
}

/**
 * Resolve a plotting field by name: scalar record fields, group entries as
 * "groups.<label>.<key>", or numeric covariates. Returns null when the name
 * does not resolve to a finite number; this is axis plumbing only, every
 * value comes straight out of the report.
 */
export function recordField(record: ObservationRecord, name: string): number | null {
  const scalar: Record<string, number> = {
    id: record.id,
    cluster: record.cluster,
    cluster_size: record.cluster_size,
    shrinkage: record.shrinkage,
    pooling: record.pooling,
    ssbf: record.ssbf,
    fitted: record.fitted,
  };
  if (name in scalar) return scalar[name];
  if (name.startsWith("groups.")) {
    const rest = name.slice("groups.".length);
    const cut = rest.lastIndexOf(".");
    if (cut < 0) return null;
    const group = record.groups[rest.slice(0, cut)];
    if (!group) return null;
    const value = group[rest.slice(cut + 1) as keyof GroupFactors];
    return typeof value === "number" && Number.isFinite(value) ? value : null;
  }
  const cov = record.covariates[name];
  return typeof cov === "number" && Number.isFinite(cov) ? cov : null;
}
