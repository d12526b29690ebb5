/** Typed client for the session service (JSON over HTTP, /api/v1). */

export interface SessionSummary {
  session_id: string;
  status: "running" | "awaiting_ranking" | "done" | "failed";
  phase: string;
  created: string;
  updated: string;
  n_observations: number;
  n_rankings: number;
  n_phase1_done: number;
  n_phase2_done: number;
  n_phase1: number;
  n_phase2: number;
  assets: string[];
  error: string | null;
}

export interface PendingQuery {
  query_id: string;
  kind: string;
  assets: string[];
  reference: { weights: number[] };
  candidates: { weights: number[] }[];
  m: number;
  n_phase2_done: number;
  n_phase2: number;
}

export interface CandidateDoc {
  portfolio: number[];
  value: number;
  log_coords: number[] | null;
}

export interface ResultsDoc {
  alpha: number;
  assets: string[];
  x_opt: { log_coords: number[]; portfolio: number[]; value: number };
  candidates: CandidateDoc[];
  efficient: number[];
  efficient_portfolios: number[][];
  blended: number[];
  thresholds: number[] | null;
  n_observations: number;
  n_rankings: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Api {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  async listSessions(): Promise<SessionSummary[]> {
    const r = await this.request("/api/v1/sessions");
    return (await r.json()).sessions;
  }

  async getSession(id: string): Promise<SessionSummary> {
    const r = await this.request(`/api/v1/sessions/${id}`);
    return r.json();
  }

  async createSession(config: unknown): Promise<string> {
    const r = await this.request("/api/v1/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
    return (await r.json()).session_id;
  }

  /** Pending ranking query, or null when the service replies 204. */
  async getQuery(id: string): Promise<PendingQuery | null> {
    const r = await this.request(`/api/v1/sessions/${id}/query`);
    if (r.status === 204) return null;
    return r.json();
  }

  async postRanking(id: string, queryId: string, order: number[]): Promise<void> {
    await this.request(`/api/v1/sessions/${id}/ranking`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ query_id: queryId, order }),
    });
  }

  async getResults(id: string, alpha?: number, partial = false): Promise<ResultsDoc> {
    const params = new URLSearchParams();
    if (alpha !== undefined) params.set("alpha", String(alpha));
    if (partial) params.set("partial", "true");
    const suffix = params.toString() ? `?${params}` : "";
    const r = await this.request(`/api/v1/sessions/${id}/results${suffix}`);
    return r.json();
  }
}
