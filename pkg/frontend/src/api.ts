/**
 * Typed client for the run-artifact JSON service.
 *
 * The fetch implementation is injectable so tests can substitute recorded
 * payloads; the panel itself performs no numeric work on what comes back.
 */

import type { ChangeKind } from "./state.js";

export interface RunSummary {
  run_id: string;
  strategies: string[];
  num_batches: number;
  n_test: number;
  dataset_hash: string;
}

export interface EmbeddingPayload {
  coords: [number, number][];
  labels: number[];
  explained_variance: number[];
}

export interface SelectionPayload {
  indices: number[];
  anchor_used: [number, number] | null;
}

export interface ChangePayload {
  kind: ChangeKind;
  strategy: string;
  row_indices: number[];
  q_axis: number[];
  values: number[][];
}

export interface MsePayload {
  strategies: string[];
  q_axis: number[];
  mse: number[][];
}

export interface HistogramPayload {
  prefix: number;
  bins: number;
  bin_edges: number[];
  strategies: Record<string, number[]>;
  all_data: number[];
}

export type SelectionRequest =
  | { anchor: [number, number]; k: number }
  | { rect: [number, number, number, number]; cap: number };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    let body: unknown = null;
    try {
      body = await res.json();
    } catch {
      // non-JSON body; fall through to the status check
    }
    if (!res.ok) {
      const msg =
        body !== null && typeof (body as { error?: unknown }).error === "string"
          ? (body as { error: string }).error
          : `HTTP ${res.status}`;
      throw new ApiError(res.status, msg);
    }
    return body as T;
  }

  listRuns(): Promise<RunSummary[]> {
    return this.request("/api/runs");
  }

  embedding(runId: string): Promise<EmbeddingPayload> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}/embedding`);
  }

  selection(runId: string, req: SelectionRequest): Promise<SelectionPayload> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}/selection`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  change(
    runId: string,
    strategy: string,
    kind: ChangeKind,
    indices: number[],
  ): Promise<ChangePayload> {
    const qs = new URLSearchParams({
      strategy,
      kind,
      indices: indices.join(","),
    });
    return this.request(`/api/runs/${encodeURIComponent(runId)}/change?${qs}`);
  }

  mse(runId: string): Promise<MsePayload> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}/mse`);
  }

  histogram(runId: string, prefix?: number, bins?: number): Promise<HistogramPayload> {
    const qs = new URLSearchParams();
    if (prefix !== undefined) qs.set("prefix", String(prefix));
    if (bins !== undefined) qs.set("bins", String(bins));
    const suffix = qs.size > 0 ? `?${qs}` : "";
    return this.request(`/api/runs/${encodeURIComponent(runId)}/query-histogram${suffix}`);
  }
}

/**
 * Monotone token gate for discarding stale async responses: take a token
 * before the request, keep the response only if the token is still current.
 */
export class LatestGate {
  private token = 0;

  next(): number {
    return ++this.token;
  }

  isCurrent(token: number): boolean {
    return token === this.token;
  }
}
