/** Round trip against a live serve process, addressed by EXPLORER_API. */

import { beforeAll, describe, expect, it } from "vitest";

import { ExplorerApi } from "../src/api";
import { ExplorerApp } from "../src/main";
import { Report, parseReport } from "../src/types";

const base = process.env.EXPLORER_API;

describe("explorer round trip", () => {
  if (!base) {
    it("requires a server address", () => {
      throw new Error(
        "set EXPLORER_API to a running serve instance, e.g. EXPLORER_API=http://127.0.0.1:8901",
      );
    });
    return;
  }

  let api: ExplorerApi;
  let app: ExplorerApp;
  let report: Report;

  beforeAll(async () => {
    api = new ExplorerApi(base);
    const health = await api.health();
    expect(health.status).toBe("ok");
    expect(health.mode).toBe("recompute");
    app = new ExplorerApp(document, api);
    document.body.appendChild(app.el);
    await app.load();
    const state = app.getState();
    expect(state).not.toBeNull();
    report = state!.report;
  });

  it("builds the four views and plots every record", () => {
    const views = app.el.querySelectorAll("figure.view");
    expect(views.length).toBe(4);
    const perGroup = report.meta.group_labels.length;
    const pts = app.el.querySelectorAll('figure[data-view="scatter"] circle.pt');
    expect(pts.length).toBe(report.records.length * perGroup);
    const facets = app.el.querySelectorAll('figure[data-view="pssbf"] g.facet');
    expect(facets.length).toBe(perGroup);
    // optional sections decide visibility, never crashes
    const contour = app.el.querySelector<HTMLElement>('figure[data-view="contour"]')!;
    const boxes = app.el.querySelector<HTMLElement>('figure[data-view="boxes"]')!;
    expect(contour.hidden).toBe(report.grid == null);
    expect(boxes.hidden).toBe(report.influence == null);
  });

  it("linked selection highlights and annotates the same id in every visible view", async () => {
    await app.select([0]);
    const visible = [...app.el.querySelectorAll("figure.view")].filter(
      (f) => !(f as HTMLElement).hidden,
    );
    expect(visible.length).toBeGreaterThanOrEqual(2);
    for (const fig of visible) {
      expect(fig.querySelectorAll('.selected[data-id="0"]').length).toBeGreaterThan(0);
      const note = fig.querySelector(".annotations")?.textContent ?? "";
      expect(note).toContain("#0");
      expect(note).toContain("shrinkage=");
      expect(note).toContain("pooling=");
      expect(note).toContain("ssbf=");
    }
    await app.select([]);
    expect(app.el.querySelectorAll(".selected").length).toBe(0);
  });

  it("treats an unknown id as a no-op with a visible warning", async () => {
    await app.select([1]);
    await app.select([report.records.length + 5000]);
    expect([...app.getState()!.selected]).toEqual([1]);
    const status = app.el.querySelector<HTMLElement>(".status")!;
    expect(status.hidden).toBe(false);
    expect(status.textContent).toContain("unknown id");
    await app.select([]);
  });

  it("an empty what-if deletion produces identically zero deltas", async () => {
    await app.whatifDelete([]);
    const delta = app.getState()!.delta!;
    expect(delta.deleted).toEqual([]);
    expect(delta.records.length).toBe(report.records.length);
    for (const d of delta.records) {
      expect(d.shrinkage).toBe(0);
      expect(d.pooling).toBe(0);
      expect(d.ssbf).toBe(0);
    }
  });

  it("deleting one cluster keeps the recomputed rows on the row-sum identity", async () => {
    const target = report.records[0].cluster;
    const ids = report.records.filter((r) => r.cluster === target).map((r) => r.id);
    expect(ids.length).toBeGreaterThan(0);

    const doc = await api.recompute(ids);
    const recomputed = parseReport(doc);
    expect(recomputed.records.length).toBe(report.records.length - ids.length);
    for (const r of recomputed.records) {
      expect(Math.abs(r.shrinkage + r.pooling - 1)).toBeLessThan(1e-8);
    }

    await app.whatifDelete(ids);
    const delta = app.getState()!.delta!;
    expect(delta.deleted).toEqual([...ids].sort((a, b) => a - b));
    expect(delta.records.length).toBe(report.records.length - ids.length);
    for (const d of delta.records) {
      expect(Number.isFinite(d.shrinkage)).toBe(true);
      expect(Number.isFinite(d.pooling)).toBe(true);
      expect(Number.isFinite(d.ssbf)).toBe(true);
    }
    const panel = app.el.querySelector<HTMLElement>(".delta")!;
    expect(panel.hidden).toBe(false);
  });

  it("reads weight rows from the API and finds them normalized", async () => {
    const row = await api.weightRow(0);
    expect(row.weights.length).toBe(row.n_obs);
    const sum = row.weights.reduce((a, b) => a + b, 0);
    expect(Math.abs(sum - 1)).toBeLessThan(1e-8);
  });
});
