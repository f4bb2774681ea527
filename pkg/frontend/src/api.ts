/** Client for the serve HTTP API.
 *
 * Every number the explorer displays comes through this module; nothing in
 * the UI recomputes weights or factors on its own.
 */

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** 409: the server runs in static mode and cannot serve this request. */
export class DisabledFeature extends ApiError {
  constructor(message: string) {
    super(409, message);
    this.name = "DisabledFeature";
  }
}

export interface Health {
  status: string;
  mode: "recompute" | "static";
  n_obs: number;
}

export interface WeightRow {
  index: number;
  n_obs: number;
  weights: number[];
}

export class ExplorerApi {
  readonly base: string;

  constructor(base: string) {
    this.base = base.replace(/\/+$/, "");
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "Content-Type": "application/json" };
    }
    const resp = await fetch(this.base + path, init);
    const text = await resp.text();
    if (!resp.ok) {
      let message = text;
      try {
        const parsed = JSON.parse(text) as { error?: string };
        if (typeof parsed.error === "string") message = parsed.error;
      } catch {
        // not JSON; keep the raw body
      }
      if (resp.status === 409) throw new DisabledFeature(message);
      throw new ApiError(resp.status, message);
    }
    return JSON.parse(text) as unknown;
  }

  health(): Promise<Health> {
    return this.request("GET", "/api/health") as Promise<Health>;
  }

  /** The full report document, unvalidated; parseReport checks the schema. */
  report(): Promise<unknown> {
    return this.request("GET", "/api/report");
  }

  weightRow(index: number): Promise<WeightRow> {
    return this.request("GET", `/api/weights/row/${index}`) as Promise<WeightRow>;
  }

  /** Recompute without the given rows; resolves to a fresh report document. */
  recompute(deleted: number[]): Promise<unknown> {
    return this.request("POST", "/api/recompute", { deleted });
  }
}
