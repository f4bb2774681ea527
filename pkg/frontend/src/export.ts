/** CSV and PNG export of the current view; the only export surface. */

import { ViewState } from "./state";

function cell(value: string | number): string {
  const s = String(value);
  // group labels contain commas, so quote anything unsafe
  if (/[",\n]/.test(s)) return `"${s.replace(/"/g, '""')}"`;
  return s;
}

function rows(lines: (string | number)[][]): string {
  return lines.map((line) => line.map(cell).join(",")).join("\n") + "\n";
}

/** Tabular snapshot of one view's data, ready to download. */
export function viewCsv(kind: string, state: ViewState): string {
  const records = state.report.records;
  if (kind === "scatter") {
    const lines: (string | number)[][] = [["id", "group", "borrowing", "ssbf"]];
    for (const r of records) {
      for (const [label, grp] of Object.entries(r.groups)) {
        lines.push([r.id, label, grp.borrowing, r.ssbf]);
      }
    }
    return rows(lines);
  }
  if (kind === "pssbf") {
    const lines: (string | number)[][] = [["id", "group", "pssbf", "ssbf"]];
    for (const r of records) {
      for (const [label, grp] of Object.entries(r.groups)) {
        lines.push([r.id, label, grp.pssbf, r.ssbf]);
      }
    }
    return rows(lines);
  }
  if (kind === "contour") {
    const grid = state.report.grid;
    if (!grid) return rows([["x", "y", "value"]]);
    const lines: (string | number)[][] = [[grid.x_axis, grid.y_axis, grid.value]];
    for (let j = 0; j < grid.y.length; j++) {
      for (let i = 0; i < grid.x.length; i++) {
        const v = grid.surface[j][i];
        lines.push([grid.x[i], grid.y[j], v == null ? "" : v]);
      }
    }
    return rows(lines);
  }
  if (kind === "boxes") {
    const inf = state.report.influence;
    const lines: (string | number)[][] = [["group", "min", "q1", "median", "q3", "max", "n"]];
    if (inf) {
      for (const [label, s] of Object.entries(inf.impact)) {
        lines.push([label, s.min, s.q1, s.median, s.q3, s.max, s.n]);
      }
    }
    return rows(lines);
  }
  throw new Error(`no such view: ${kind}`);
}

export function downloadCsv(doc: Document, name: string, text: string): void {
  try {
    const url = URL.createObjectURL(new Blob([text], { type: "text/csv" }));
    const a = doc.createElement("a");
    a.href = url;
    a.download = name;
    a.click();
    URL.revokeObjectURL(url);
  } catch {
    // object URLs are unavailable outside a real browser
  }
}

/** Rasterize a view's svg; browsers only, a no-op where canvas is missing. */
export function downloadPng(doc: Document, name: string, svg: SVGSVGElement): void {
  try {
    const xml = new XMLSerializer().serializeToString(svg);
    const img = doc.createElement("img");
    const canvas = doc.createElement("canvas");
    const box = svg.viewBox.baseVal;
    canvas.width = box.width * 2;
    canvas.height = box.height * 2;
    img.onload = () => {
      const ctx = canvas.getContext("2d");
      if (!ctx) return;
      ctx.fillStyle = "#ffffff";
      ctx.fillRect(0, 0, canvas.width, canvas.height);
      ctx.drawImage(img, 0, 0, canvas.width, canvas.height);
      const a = doc.createElement("a");
      a.href = canvas.toDataURL("image/png");
      a.download = name;
      a.click();
    };
    img.src = "data:image/svg+xml;base64," + btoa(unescape(encodeURIComponent(xml)));
  } catch {
    // rasterizing needs a real canvas; skip silently elsewhere
  }
}
