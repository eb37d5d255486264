// Typed client for the composition service. The fetch implementation is
// injected so tests can replay recorded exchanges without a network.

import type { ApiErrorBody, SessionState, SessionSpec, StyleSummary } from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly details: Record<string, unknown>;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
    this.details = body.details ?? {};
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      const errBody = (await resp.json()) as ApiErrorBody;
      throw new ApiError(resp.status, errBody);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string; styles: string[] }> {
    return this.request("GET", "/api/health");
  }

  listStyles(): Promise<StyleSummary[]> {
    return this.request("GET", "/api/styles");
  }

  createSession(input: { title: string; spec: Partial<SessionSpec> }): Promise<SessionState> {
    return this.request("POST", "/api/sessions", input);
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  requestCandidates(
    sessionId: string,
    count: number,
    specOverrides?: Record<string, unknown>,
  ): Promise<SessionState> {
    const body: Record<string, unknown> = { count };
    if (specOverrides && Object.keys(specOverrides).length > 0) {
      body.spec_overrides = specOverrides;
    }
    return this.request("POST", `/api/sessions/${sessionId}/candidates`, body);
  }

  acceptCandidate(sessionId: string, candidateId: string): Promise<SessionState> {
    return this.request("POST", `/api/sessions/${sessionId}/accept`, {
      candidate_id: candidateId,
    });
  }

  acceptText(sessionId: string, text: string): Promise<SessionState> {
    return this.request("POST", `/api/sessions/${sessionId}/accept`, { text });
  }

  undo(sessionId: string): Promise<SessionState> {
    return this.request("POST", `/api/sessions/${sessionId}/undo`);
  }

  async exportSession(sessionId: string, format: "text" | "markdown" | "json"): Promise<string> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/api/sessions/${sessionId}/export?format=${format}`,
      { method: "POST" },
    );
    if (!resp.ok) {
      throw new ApiError(resp.status, (await resp.json()) as ApiErrorBody);
    }
    return resp.text();
  }
}
