/** Boxplots of borrowing factors toward the report's marked points. */

import * as d3 from "d3";
import { ViewState } from "../state";
import { View, annotate, domain, makeFrame, plotArea } from "./common";

export function boxesView(doc: Document): View {
  const frame = makeFrame(doc, "boxes", "influence of marked points");
  return {
    el: frame.el,
    kind: "boxes",
    update(state: ViewState) {
      const inf = state.report.influence;
      frame.el.hidden = inf == null;
      if (!inf) return;
      frame.caption.textContent = `influence of marked points (${inf.points.length} marked)`;

      const area = plotArea(frame.svg);
      const labels = Object.keys(inf.impact);
      const x = d3.scaleLinear(
        domain(labels.flatMap((l) => [inf.impact[l].min, inf.impact[l].max])),
        [0, area.w],
      );
      const band = d3.scaleBand(labels, [0, area.h]).padding(0.45);
      const bw = band.bandwidth();

      for (const label of labels) {
        const s = inf.impact[label];
        const top = band(label) ?? 0;
        const mid = top + bw / 2;
        const color = state.colors.get(label) ?? "#666666";
        const g = area.g.append("g").attr("class", "box").attr("data-label", label);
        g.append("line")
          .attr("class", "whisker")
          .attr("x1", x(s.min))
          .attr("x2", x(s.max))
          .attr("y1", mid)
          .attr("y2", mid)
          .attr("stroke", "#999999");
        g.append("rect")
          .attr("x", x(s.q1))
          .attr("y", top)
          .attr("width", Math.max(x(s.q3) - x(s.q1), 1))
          .attr("height", bw)
          .attr("fill", color)
          .attr("fill-opacity", 0.6)
          .attr("stroke", color);
        g.append("line")
          .attr("class", "median")
          .attr("x1", x(s.median))
          .attr("x2", x(s.median))
          .attr("y1", top)
          .attr("y2", top + bw)
          .attr("stroke", "#111111")
          .attr("stroke-width", 2);
        g.append("text")
          .attr("class", "box-label")
          .attr("x", 2)
          .attr("y", top - 3)
          .text(`${label} (n=${s.n})`);
      }

      // selected records appear as their per-group borrowing factors
      for (const id of state.selected) {
        const r = state.report.records[id];
        if (!r) continue;
        for (const label of labels) {
          const grp = r.groups[label];
          const top = band(label);
          if (!grp || top === undefined) continue;
          area.g
            .append("circle")
            .attr("class", "mark selected")
            .attr("data-id", id)
            .attr("cx", x(grp.borrowing))
            .attr("cy", top + bw / 2)
            .attr("r", 4)
            .attr("fill", "none")
            .attr("stroke", "#111111")
            .attr("stroke-width", 2);
        }
      }

      area.g
        .append("g")
        .attr("class", "axis x")
        .attr("transform", `translate(0,${area.h})`)
        .call(d3.axisBottom(x).ticks(5));
      area.g
        .append("text")
        .attr("class", "axis-label")
        .attr("x", area.w / 2)
        .attr("y", area.h + 34)
        .attr("text-anchor", "middle")
        .text("borrowing factor toward marked points");
      annotate(frame, state);
    },
  };
}
