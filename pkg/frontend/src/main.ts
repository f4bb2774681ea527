/** Application shell: four linked views over one served report. */

import { DisabledFeature, ExplorerApi } from "./api";
import { viewCsv, downloadCsv, downloadPng } from "./export";
import { SerialQueue } from "./queue";
import {
  ViewState,
  applyRecompute,
  initialState,
  linkedSelect,
  stageDeletion,
} from "./state";
import { Report, SchemaMismatch, parseReport } from "./types";
import { boxesView } from "./views/boxes";
import { View, fmt } from "./views/common";
import { contourView } from "./views/contour";
import { pssbfView } from "./views/pssbf";
import { scatterView } from "./views/scatter";

function parseIds(text: string): number[] {
  return text
    .split(/[\s,]+/)
    .filter((tok) => tok.length > 0)
    .map((tok) => Number(tok));
}

export class ExplorerApp {
  readonly el: HTMLElement;
  private readonly doc: Document;
  private readonly api: ExplorerApi;
  private readonly queue = new SerialQueue();
  private readonly views: View[];
  private readonly banner: HTMLElement;
  private readonly status: HTMLElement;
  private readonly deltaPanel: HTMLElement;
  private state: ViewState | null = null;

  constructor(doc: Document, api: ExplorerApi) {
    this.doc = doc;
    this.api = api;
    this.el = doc.createElement("div");
    this.el.className = "explorer";

    this.banner = doc.createElement("div");
    this.banner.className = "banner";
    this.banner.hidden = true;
    this.el.appendChild(this.banner);

    this.el.appendChild(this.buildToolbar());

    this.status = doc.createElement("div");
    this.status.className = "status";
    this.status.setAttribute("role", "status");
    this.status.hidden = true;
    this.el.appendChild(this.status);

    const grid = doc.createElement("div");
    grid.className = "grid";
    this.views = [scatterView(doc), pssbfView(doc), contourView(doc), boxesView(doc)];
    for (const view of this.views) {
      grid.appendChild(view.el);
      view.el.addEventListener("click", (ev) => this.onViewClick(ev));
    }
    this.el.appendChild(grid);

    this.deltaPanel = doc.createElement("div");
    this.deltaPanel.className = "delta";
    this.deltaPanel.hidden = true;
    this.el.appendChild(this.deltaPanel);
  }

  private buildToolbar(): HTMLElement {
    const doc = this.doc;
    const bar = doc.createElement("div");
    bar.className = "toolbar";
    const input = doc.createElement("input");
    input.type = "text";
    input.placeholder = "ids, e.g. 3, 17";
    input.className = "ids";
    bar.appendChild(input);

    const button = (label: string, cls: string, onClick: () => void) => {
      const b = doc.createElement("button");
      b.textContent = label;
      b.className = cls;
      b.addEventListener("click", onClick);
      bar.appendChild(b);
      return b;
    };
    button("Select", "select", () => void this.select(parseIds(input.value)));
    button("Clear", "clear", () => void this.select([]));
    button("What-if delete", "whatif", () =>
      void this.whatifDelete(parseIds(input.value)).catch((err: unknown) => {
        if (!this.state) return;
        this.state = {
          ...this.state,
          notice: { kind: "error", text: `recompute failed: ${(err as Error).message}` },
        };
        this.render();
      }),
    );

    const picker = doc.createElement("select");
    picker.className = "view-pick";
    for (const kind of ["scatter", "pssbf", "contour", "boxes"]) {
      const opt = doc.createElement("option");
      opt.value = kind;
      opt.textContent = kind;
      picker.appendChild(opt);
    }
    bar.appendChild(picker);
    button("Export CSV", "csv", () => {
      if (!this.state) return;
      downloadCsv(doc, `${picker.value}.csv`, viewCsv(picker.value, this.state));
    });
    button("Export PNG", "png", () => {
      const view = this.views.find((v) => v.kind === picker.value);
      const svg = view?.el.querySelector("svg");
      if (svg) downloadPng(doc, `${picker.value}.png`, svg);
    });
    return bar;
  }

  private onViewClick(ev: Event): void {
    const target = ev.target as Element | null;
    const hit = target?.closest("[data-id]");
    if (hit) {
      const id = Number(hit.getAttribute("data-id"));
      if ((ev as MouseEvent).shiftKey) void this.toggleSelect(id);
      else void this.select([id]);
    } else if (target?.closest("svg")) {
      void this.select([]);
    }
  }

  /** Fetch and render the report; a schema mismatch becomes a banner. */
  async load(): Promise<void> {
    let report: Report;
    try {
      report = parseReport(await this.api.report());
    } catch (err) {
      if (err instanceof SchemaMismatch) {
        this.banner.hidden = false;
        this.banner.textContent =
          `cannot load report: expected schema_version ${err.expected}, ` +
          `found ${String(err.found)}`;
        return;
      }
      this.banner.hidden = false;
      this.banner.textContent = `cannot load report: ${(err as Error).message}`;
      throw err;
    }
    this.banner.hidden = true;
    this.state = initialState(report);
    this.render();
  }

  /** Highlight ids in every view; queued behind any running recompute. */
  select(ids: number[]): Promise<void> {
    return this.queue.enqueue(() => {
      if (!this.state) return;
      this.state = linkedSelect(this.state, ids);
      this.render();
    });
  }

  /** Flip one id's membership, evaluated when its turn in the queue comes. */
  toggleSelect(id: number): Promise<void> {
    return this.queue.enqueue(() => {
      if (!this.state) return;
      const next = new Set(this.state.selected);
      if (next.has(id)) next.delete(id);
      else next.add(id);
      this.state = linkedSelect(this.state, [...next]);
      this.render();
    });
  }

  /**
   * Recompute without the given rows and render before/after deltas.
   * Only one request is ever in flight; a static server turns the
   * feature into a notice instead of an error.
   */
  whatifDelete(ids: number[]): Promise<void> {
    return this.queue.enqueue(async () => {
      if (!this.state) return;
      const staged = stageDeletion(this.state, ids);
      this.state = staged;
      this.render();
      if (staged.notice?.kind === "warning") return;
      const deleted = [...staged.pending].sort((a, b) => a - b);
      try {
        const doc = await this.api.recompute(deleted);
        this.state = applyRecompute(this.state, parseReport(doc), deleted);
      } catch (err) {
        if (err instanceof DisabledFeature) {
          this.state = {
            ...this.state,
            pending: new Set(),
            notice: { kind: "disabled", text: `what-if deletion is unavailable: ${err.message}` },
          };
        } else {
          throw err;
        }
      } finally {
        this.render();
      }
    });
  }

  /** Resolves once every queued interaction has been applied. */
  whenIdle(): Promise<void> {
    return this.queue.enqueue(() => undefined);
  }

  getState(): ViewState | null {
    return this.state;
  }

  private render(): void {
    const state = this.state;
    if (!state) return;
    const notice = state.notice;
    this.status.hidden = notice == null;
    this.status.textContent = notice ? notice.text : "";
    this.status.className = notice ? `status notice-${notice.kind}` : "status";
    for (const view of this.views) view.update(state);
    this.renderDelta(state);
  }

  private renderDelta(state: ViewState): void {
    const panel = this.deltaPanel;
    panel.hidden = state.delta == null;
    panel.textContent = "";
    if (!state.delta) return;
    const doc = this.doc;
    const { deleted, records } = state.delta;
    panel.dataset.deleted = deleted.join(",");

    const head = doc.createElement("div");
    head.className = "delta-head";
    const maxAbs = records.reduce(
      (m, r) => Math.max(m, Math.abs(r.shrinkage), Math.abs(r.pooling), Math.abs(r.ssbf)),
      0,
    );
    head.textContent =
      deleted.length === 0
        ? "recomputed with nothing deleted: all deltas are zero"
        : `recomputed without rows [${deleted.join(", ")}]: ` +
          `${records.length} records kept, max |delta| ${fmt(maxAbs)}`;
    panel.appendChild(head);

    const table = doc.createElement("table");
    table.className = "delta-table";
    const header = doc.createElement("tr");
    for (const text of ["id", "Δ shrinkage", "Δ pooling", "Δ ssbf"]) {
      const th = doc.createElement("th");
      th.textContent = text;
      header.appendChild(th);
    }
    table.appendChild(header);
    const biggest = [...records].sort(
      (a, b) => Math.abs(b.ssbf) - Math.abs(a.ssbf),
    );
    for (const r of biggest.slice(0, 12)) {
      const tr = doc.createElement("tr");
      tr.dataset.id = String(r.id);
      for (const v of [r.id, r.shrinkage, r.pooling, r.ssbf]) {
        const td = doc.createElement("td");
        td.textContent = typeof v === "number" && !Number.isInteger(v) ? fmt(v) : String(v);
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    panel.appendChild(table);
  }
}

/** API base: the ?api= query parameter, else the page's own origin. */
export function apiBase(loc: Location | URL): string {
  const url = new URL(loc.href);
  const q = url.searchParams.get("api");
  return (q ?? url.origin).replace(/\/+$/, "");
}

function boot(): void {
  if (typeof document === "undefined") return;
  const mount = document.getElementById("app");
  if (!mount) return;
  const app = new ExplorerApp(document, new ExplorerApi(apiBase(window.location)));
  mount.appendChild(app.el);
  app.load().catch((err) => console.error(err));
}

boot();
