/** View state and its pure transitions.
 *
 * Selection is a pure function of the id set: selecting and then clearing
 * leaves a state deep-equal to the initial one, so views rendered from
 * state alone cannot drift. Deltas exist only after a recompute round trip.
 */

import { colorMap } from "./palette";
import { Report } from "./types";

export interface Notice {
  kind: "warning" | "error" | "disabled";
  text: string;
}

export interface RecordDelta {
  id: number;
  shrinkage: number;
  pooling: number;
  ssbf: number;
}

/** Per-record before/after changes, keyed by baseline ids. */
export interface RecomputeDelta {
  deleted: number[];
  records: RecordDelta[];
}

export interface ViewState {
  readonly report: Report;
  readonly selected: ReadonlySet<number>;
  readonly colors: ReadonlyMap<string, string>;
  readonly pending: ReadonlySet<number>;
  readonly delta: RecomputeDelta | null;
  readonly notice: Notice | null;
}

export function initialState(report: Report): ViewState {
  return {
    report,
    selected: new Set(),
    colors: colorMap(report.meta.group_labels),
    pending: new Set(),
    delta: null,
    notice: null,
  };
}

function unknownIds(report: Report, ids: Iterable<number>): number[] {
  const n = report.records.length;
  return [...ids].filter((id) => !Number.isInteger(id) || id < 0 || id >= n);
}

function warn(text: string): Notice {
  return { kind: "warning", text };
}

/**
 * Replace the selection. Ids outside the report leave the selection
 * untouched and surface a warning instead; the empty set clears it.
 */
export function linkedSelect(state: ViewState, ids: Iterable<number>): ViewState {
  const want = new Set(ids);
  const unknown = unknownIds(state.report, want);
  if (unknown.length > 0) {
    const noun = unknown.length > 1 ? "ids" : "id";
    return { ...state, notice: warn(`unknown ${noun} ${unknown.join(", ")}; selection unchanged`) };
  }
  return { ...state, selected: want, notice: null };
}

/** Stage rows for what-if deletion; validation mirrors linkedSelect. */
export function stageDeletion(state: ViewState, ids: Iterable<number>): ViewState {
  const want = new Set(ids);
  const unknown = unknownIds(state.report, want);
  if (unknown.length > 0) {
    const noun = unknown.length > 1 ? "ids" : "id";
    return { ...state, notice: warn(`unknown ${noun} ${unknown.join(", ")}; nothing staged`) };
  }
  return { ...state, pending: want, notice: null };
}

/**
 * Per-record differences between the baseline report and a recompute.
 *
 * The server renumbers kept rows 0..k-1 in their original order, so kept
 * baseline records line up with recomputed records by position. Deltas are
 * reported under the baseline ids.
 */
export function deltaBetween(baseline: Report, recomputed: Report, deleted: number[]): RecomputeDelta {
  const drop = new Set(deleted);
  const kept = baseline.records.filter((r) => !drop.has(r.id));
  if (kept.length !== recomputed.records.length) {
    throw new Error(
      `recompute returned ${recomputed.records.length} records, expected ${kept.length}`,
    );
  }
  const records = kept.map((before, i) => {
    const after = recomputed.records[i];
    return {
      id: before.id,
      shrinkage: after.shrinkage - before.shrinkage,
      pooling: after.pooling - before.pooling,
      ssbf: after.ssbf - before.ssbf,
    };
  });
  return { deleted: [...drop].sort((a, b) => a - b), records };
}

/** Fold a finished recompute into the state and clear the pending set. */
export function applyRecompute(state: ViewState, recomputed: Report, deleted: number[]): ViewState {
  return {
    ...state,
    delta: deltaBetween(state.report, recomputed, deleted),
    pending: new Set(),
    notice: null,
  };
}
