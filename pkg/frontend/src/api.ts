import type { EventKind, Report, RunInfo, ScenarioDoc } from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; body?: string; headers?: Record<string, string> },
) => Promise<{ ok: boolean; status: number; text(): Promise<string> }>;

export class ServiceError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`service ${status}: ${detail}`);
  }
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

/** Thin typed client over the restoration service HTTP API. */
export class ServiceClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      body: body === undefined ? undefined : JSON.stringify(body),
      headers: { "content-type": "application/json" },
    });
    const text = await resp.text();
    if (!resp.ok) {
      let detail = text;
      try {
        detail = JSON.parse(text).detail ?? text;
      } catch {
        // plain-text error body
      }
      throw new ServiceError(resp.status, String(detail));
    }
    return JSON.parse(text) as T;
  }

  createScenario(doc: ScenarioDoc): Promise<{ id: string }> {
    return this.request("POST", "/scenarios", doc);
  }

  getScenario(id: string): Promise<ScenarioDoc> {
    return this.request("GET", `/scenarios/${id}`);
  }

  postEvent(id: string, kind: EventKind, payload: Record<string, unknown>): Promise<ScenarioDoc> {
    return this.request("POST", `/scenarios/${id}/events`, { kind, payload });
  }

  startSolve(id: string, overrides: Record<string, unknown> = {}): Promise<{ run_id: string }> {
    return this.request("POST", `/scenarios/${id}/solve`, overrides);
  }

  runInfo(runId: string): Promise<RunInfo> {
    return this.request("GET", `/runs/${runId}`);
  }

  ranking(runId: string): Promise<Report> {
    return this.request("GET", `/runs/${runId}/ranking`);
  }

  /** Start a run and poll it to completion; reports progress on the way. */
  async solveAndWait(
    id: string,
    overrides: Record<string, unknown> = {},
    onProgress?: (info: RunInfo) => void,
    pollMs = 150,
  ): Promise<{ runId: string; report: Report }> {
    const { run_id } = await this.startSolve(id, overrides);
    for (;;) {
      const info = await this.runInfo(run_id);
      onProgress?.(info);
      if (info.status === "done") {
        return { runId: run_id, report: await this.ranking(run_id) };
      }
      if (info.status === "error") {
        throw new ServiceError(500, info.error ?? "solve failed");
      }
      await sleep(pollMs);
    }
  }
}
