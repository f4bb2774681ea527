/** SSBF against the group borrowing factor, one point per record per group. */

import * as d3 from "d3";
import { ViewState } from "../state";
import {
  View,
  annotate,
  domain,
  drawAxes,
  makeFrame,
  plotArea,
  pointClass,
  pointRadius,
} from "./common";

interface Point {
  id: number;
  label: string;
  x: number;
  y: number;
}

export function scatterView(doc: Document): View {
  const frame = makeFrame(doc, "scatter", "SSBF vs group borrowing factor");
  return {
    el: frame.el,
    kind: "scatter",
    update(state: ViewState) {
      const area = plotArea(frame.svg);
      const pts: Point[] = [];
      for (const r of state.report.records) {
        for (const [label, grp] of Object.entries(r.groups)) {
          pts.push({ id: r.id, label, x: grp.borrowing, y: r.ssbf });
        }
      }
      const x = d3.scaleLinear(domain(pts.map((p) => p.x)), [0, area.w]);
      const y = d3.scaleLinear(domain(pts.map((p) => p.y)), [area.h, 0]);
      area.g
        .selectAll("circle")
        .data(pts)
        .join("circle")
        .attr("class", (p) => pointClass(p.id, state))
        .attr("data-id", (p) => p.id)
        .attr("data-label", (p) => p.label)
        .attr("cx", (p) => x(p.x))
        .attr("cy", (p) => y(p.y))
        .attr("r", (p) => pointRadius(p.id, state))
        .attr("fill", (p) => state.colors.get(p.label) ?? "#666666");
      drawAxes(area, x, y, "group borrowing factor", "ssbf");
      annotate(frame, state);
    },
  };
}
