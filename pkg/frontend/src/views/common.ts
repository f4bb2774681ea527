/** Shared plumbing for the four views. */

import * as d3 from "d3";
import { ViewState } from "../state";

export interface View {
  readonly el: HTMLElement;
  readonly kind: string;
  /** Rebuild the rendering from state alone. */
  update(state: ViewState): void;
}

export const WIDTH = 440;
export const HEIGHT = 320;
export const MARGIN = { top: 18, right: 16, bottom: 42, left: 56 };

export interface Frame {
  el: HTMLElement;
  svg: SVGSVGElement;
  caption: HTMLElement;
  notes: HTMLElement;
}

export function makeFrame(doc: Document, kind: string, title: string): Frame {
  const el = doc.createElement("figure");
  el.className = "view";
  el.dataset.view = kind;
  const caption = doc.createElement("figcaption");
  caption.textContent = title;
  el.appendChild(caption);
  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "plot");
  el.appendChild(svg);
  const notes = doc.createElement("div");
  notes.className = "annotations";
  el.appendChild(notes);
  return { el, svg, caption, notes };
}

export interface Area {
  g: d3.Selection<SVGGElement, unknown, null, undefined>;
  w: number;
  h: number;
}

/** Wipe the svg and return a margin-translated plot group. */
export function plotArea(svg: SVGSVGElement): Area {
  const root = d3.select(svg);
  root.selectAll("*").remove();
  const g = root
    .append("g")
    .attr("transform", `translate(${MARGIN.left},${MARGIN.top})`);
  return {
    g,
    w: WIDTH - MARGIN.left - MARGIN.right,
    h: HEIGHT - MARGIN.top - MARGIN.bottom,
  };
}

/** Min/max with a little headroom; degenerate spans get a unit pad. */
export function domain(values: Iterable<number>): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

export function drawAxes(
  area: Area,
  x: d3.ScaleLinear<number, number>,
  y: d3.ScaleLinear<number, number>,
  xLabel: string,
  yLabel: string,
): void {
  const { g, w, h } = area;
  g.append("g")
    .attr("class", "axis x")
    .attr("transform", `translate(0,${h})`)
    .call(d3.axisBottom(x).ticks(5));
  g.append("g").attr("class", "axis y").call(d3.axisLeft(y).ticks(5));
  g.append("text")
    .attr("class", "axis-label")
    .attr("x", w / 2)
    .attr("y", h + 34)
    .attr("text-anchor", "middle")
    .text(xLabel);
  g.append("text")
    .attr("class", "axis-label")
    .attr("transform", "rotate(-90)")
    .attr("x", -h / 2)
    .attr("y", -42)
    .attr("text-anchor", "middle")
    .text(yLabel);
}

export const fmt = d3.format(".4f");

export function pointClass(id: number, state: ViewState): string {
  return state.selected.has(id) ? "pt selected" : "pt";
}

export function pointRadius(id: number, state: ViewState): number {
  return state.selected.has(id) ? 5 : 3;
}

/**
 * Annotation block listing each selected record with its cluster, factors,
 * and per-group entries; identical under every view so a selection reads
 * the same everywhere.
 */
export function annotate(frame: Frame, state: ViewState): void {
  const { notes } = frame;
  notes.textContent = "";
  const doc = notes.ownerDocument;
  for (const id of [...state.selected].sort((a, b) => a - b)) {
    const r = state.report.records[id];
    if (!r) continue;
    const groups = Object.entries(r.groups)
      .map(([label, grp]) => `${label}: b=${fmt(grp.borrowing)} pssbf=${fmt(grp.pssbf)}`)
      .join("; ");
    const row = doc.createElement("div");
    row.className = "annotation";
    row.dataset.id = String(id);
    row.textContent =
      `#${r.id} cluster ${r.cluster} (size ${r.cluster_size}) ` +
      `shrinkage=${fmt(r.shrinkage)} pooling=${fmt(r.pooling)} ssbf=${fmt(r.ssbf)} | ${groups}`;
    notes.appendChild(row);
  }
}
