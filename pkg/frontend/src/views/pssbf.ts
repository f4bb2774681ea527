/** SSBF against partial SSBF, faceted by relationship group. */

import * as d3 from "d3";
import { ViewState } from "../state";
import {
  View,
  annotate,
  domain,
  makeFrame,
  plotArea,
  pointClass,
  pointRadius,
} from "./common";

export function pssbfView(doc: Document): View {
  const frame = makeFrame(doc, "pssbf", "SSBF vs partial SSBF by group");
  return {
    el: frame.el,
    kind: "pssbf",
    update(state: ViewState) {
      const area = plotArea(frame.svg);
      const labels = state.report.meta.group_labels;
      const records = state.report.records;
      const fw = labels.length > 0 ? area.w / labels.length : area.w;
      const y = d3.scaleLinear(domain(records.map((r) => r.ssbf)), [area.h, 0]);
      area.g.append("g").attr("class", "axis y").call(d3.axisLeft(y).ticks(5));
      area.g
        .append("text")
        .attr("class", "axis-label")
        .attr("transform", "rotate(-90)")
        .attr("x", -area.h / 2)
        .attr("y", -42)
        .attr("text-anchor", "middle")
        .text("ssbf");

      labels.forEach((label, k) => {
        const facet = area.g
          .append("g")
          .attr("class", "facet")
          .attr("data-label", label)
          .attr("transform", `translate(${k * fw},0)`);
        facet
          .append("rect")
          .attr("class", "facet-frame")
          .attr("width", fw)
          .attr("height", area.h)
          .attr("fill", "none")
          .attr("stroke", "#dddddd");
        facet
          .append("text")
          .attr("class", "facet-title")
          .attr("x", 4)
          .attr("y", -5)
          .text(label);
        const x = d3.scaleLinear(
          domain(records.map((r) => r.groups[label]?.pssbf ?? NaN)),
          [8, fw - 8],
        );
        facet
          .append("g")
          .attr("class", "axis x")
          .attr("transform", `translate(0,${area.h})`)
          .call(d3.axisBottom(x).ticks(3));
        facet
          .selectAll("circle")
          .data(records.filter((r) => r.groups[label] !== undefined))
          .join("circle")
          .attr("class", (r) => pointClass(r.id, state))
          .attr("data-id", (r) => r.id)
          .attr("cx", (r) => x(r.groups[label].pssbf))
          .attr("cy", (r) => y(r.ssbf))
          .attr("r", (r) => pointRadius(r.id, state))
          .attr("fill", state.colors.get(label) ?? "#666666");
      });
      area.g
        .append("text")
        .attr("class", "axis-label")
        .attr("x", area.w / 2)
        .attr("y", area.h + 34)
        .attr("text-anchor", "middle")
        .text("partial ssbf");
      annotate(frame, state);
    },
  };
}
