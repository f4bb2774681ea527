import { describe, expect, it } from "vitest";

import { initialState, linkedSelect } from "../src/state";
import { parseReport } from "../src/types";
import { boxesView } from "../src/views/boxes";
import { contourView } from "../src/views/contour";
import { pssbfView } from "../src/views/pssbf";
import { scatterView } from "../src/views/scatter";
import { LABELS, fixtureReport } from "./fixture";

const makers = {
  scatter: scatterView,
  pssbf: pssbfView,
  contour: contourView,
  boxes: boxesView,
};

function freshState() {
  return initialState(parseReport(fixtureReport()));
}

describe("views", () => {
  it("scatter draws one point per record per group, colored by group", () => {
    const state = freshState();
    const view = makers.scatter(document);
    view.update(state);
    const pts = view.el.querySelectorAll("circle.pt");
    expect(pts.length).toBe(state.report.records.length * LABELS.length);
    const fills = new Set([...pts].map((p) => p.getAttribute("fill")));
    expect(fills).toEqual(new Set(LABELS.map((l) => state.colors.get(l))));
  });

  it("pssbf renders one facet per group label", () => {
    const state = freshState();
    const view = makers.pssbf(document);
    view.update(state);
    const facets = view.el.querySelectorAll("g.facet");
    expect(facets.length).toBe(LABELS.length);
    for (const facet of facets) {
      expect(facet.querySelectorAll("circle.pt").length).toBe(state.report.records.length);
    }
  });

  it("contour renders filled levels from the grid section", () => {
    const state = freshState();
    const view = makers.contour(document);
    view.update(state);
    expect(view.el.hidden).toBe(false);
    expect(view.el.querySelectorAll("path.level").length).toBeGreaterThan(0);
    expect(view.el.querySelector("figcaption")?.textContent).toContain("shrinkage");
  });

  it("contour hides itself when the report has no grid section", () => {
    const doc = fixtureReport();
    doc.grid = null;
    const state = initialState(parseReport(doc));
    const view = makers.contour(document);
    view.update(state);
    expect(view.el.hidden).toBe(true);
  });

  it("boxes draws one box per group and hides without an influence section", () => {
    const state = freshState();
    const view = makers.boxes(document);
    view.update(state);
    expect(view.el.hidden).toBe(false);
    expect(view.el.querySelectorAll("g.box").length).toBe(LABELS.length);
    expect(view.el.querySelector("figcaption")?.textContent).toContain("1 marked");

    const bare = fixtureReport();
    bare.influence = null;
    view.update(initialState(parseReport(bare)));
    expect(view.el.hidden).toBe(true);
  });

  it("highlights the same selected id in every view", () => {
    const state = linkedSelect(freshState(), [0]);
    for (const make of Object.values(makers)) {
      const view = make(document);
      view.update(state);
      expect(
        view.el.querySelectorAll('.selected[data-id="0"]').length,
        view.kind,
      ).toBeGreaterThan(0);
      const note = view.el.querySelector(".annotations")?.textContent ?? "";
      expect(note).toContain("#0");
      expect(note).toContain("shrinkage=0.4200");
      expect(note).toContain("pooling=");
      expect(note).toContain(LABELS[0]);
    }
  });

  it("renders as a pure function of state: select then clear restores the DOM", () => {
    for (const make of Object.values(makers)) {
      const view = make(document);
      view.update(freshState());
      const before = view.el.innerHTML;
      view.update(linkedSelect(freshState(), [1, 2]));
      expect(view.el.innerHTML).not.toBe(before);
      view.update(linkedSelect(linkedSelect(freshState(), [1, 2]), []));
      expect(view.el.innerHTML).toBe(before);
    }
  });
});
