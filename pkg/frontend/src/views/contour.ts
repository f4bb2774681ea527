/** Contour rendering of the report's kernel-smoothed grid section. */

import * as d3 from "d3";
import { ViewState } from "../state";
import { recordField } from "../types";
import { View, annotate, drawAxes, makeFrame, plotArea } from "./common";

export function contourView(doc: Document): View {
  const frame = makeFrame(doc, "contour", "smoothed surface");
  return {
    el: frame.el,
    kind: "contour",
    update(state: ViewState) {
      const grid = state.report.grid;
      // the API has no smoothing endpoint, so a report without a grid
      // section hides the view rather than degrading to a blank panel
      frame.el.hidden = grid == null;
      if (!grid) return;
      frame.caption.textContent = `smoothed ${grid.value} over ${grid.x_axis} and ${grid.y_axis}`;

      const area = plotArea(frame.svg);
      const nx = grid.x.length;
      const ny = grid.y.length;
      const values = new Array<number>(nx * ny);
      const finite: number[] = [];
      for (let j = 0; j < ny; j++) {
        for (let i = 0; i < nx; i++) {
          const v = grid.surface[j][i];
          values[j * nx + i] = v == null ? NaN : v;
          if (v != null && Number.isFinite(v)) finite.push(v);
        }
      }
      const xv = d3.scaleLinear([grid.x[0], grid.x[nx - 1]], [0, area.w]);
      const yv = d3.scaleLinear([grid.y[0], grid.y[ny - 1]], [area.h, 0]);

      if (finite.length > 0) {
        const contours = d3.contours().size([nx, ny]).thresholds(8)(values);
        const [lo, hi] = [Math.min(...finite), Math.max(...finite)];
        const color = d3.scaleSequential(d3.interpolateViridis).domain([lo, hi]);
        // contour polygons live in grid index space; stretch to pixels and
        // flip y so row 0 (bottom of the y axis) lands at the bottom
        const ix = d3.scaleLinear([0, nx - 1], [0, area.w]);
        const iy = d3.scaleLinear([0, ny - 1], [area.h, 0]);
        const transform = d3.geoTransform({
          point(px, py) {
            this.stream.point(ix(px), iy(py));
          },
        });
        const path = d3.geoPath(transform);
        area.g
          .selectAll("path.level")
          .data(contours)
          .join("path")
          .attr("class", "level")
          .attr("d", path)
          .attr("fill", (c) => color(c.value))
          .attr("fill-opacity", 0.85)
          .attr("stroke", "#ffffff")
          .attr("stroke-opacity", 0.25);
      }

      // selected records, when their coordinates resolve on these axes
      for (const id of state.selected) {
        const r = state.report.records[id];
        if (!r) continue;
        const px = recordField(r, grid.x_axis);
        const py = recordField(r, grid.y_axis);
        if (px == null || py == null) continue;
        area.g
          .append("circle")
          .attr("class", "mark selected")
          .attr("data-id", id)
          .attr("cx", xv(px))
          .attr("cy", yv(py))
          .attr("r", 5)
          .attr("fill", "none")
          .attr("stroke", "#111111")
          .attr("stroke-width", 2);
      }

      drawAxes(area, xv, yv, grid.x_axis, grid.y_axis);
      annotate(frame, state);
    },
  };
}
