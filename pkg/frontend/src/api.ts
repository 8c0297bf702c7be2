/** Thin typed client over the QA service HTTP API. */

import type {
  ApiErrorBody,
  QueryRequest,
  QueryResponse,
  SessionHandle,
} from "./types.js";

export class ApiError extends Error {
  code: string;
  status: number;

  constructor(status: number, body: ApiErrorBody | null, fallback: string) {
    super(body?.message ?? fallback);
    this.code = body?.code ?? "unknown_error";
    this.status = status;
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let body: ApiErrorBody | null = null;
    try {
      body = (await resp.json()) as ApiErrorBody;
    } catch {
      body = null;
    }
    throw new ApiError(resp.status, body, `request failed (${resp.status})`);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    return asJson<T>(resp);
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("/health");
  }

  createSession(overrides: Record<string, unknown> = {}): Promise<SessionHandle> {
    return this.post("/sessions", { overrides });
  }

  getSession(id: string): Promise<SessionHandle> {
    return this.request(`/sessions/${id}`);
  }

  deleteSession(id: string): Promise<{ status: string }> {
    return this.request(`/sessions/${id}`, { method: "DELETE" });
  }

  /** Uploads browser-read file contents as inline documents. */
  addDocuments(
    id: string,
    docs: { filename: string; content: string }[],
  ): Promise<SessionHandle & { warnings: string[] }> {
    return this.post(`/sessions/${id}/documents`, { documents: docs });
  }

  query(id: string, body: QueryRequest): Promise<QueryResponse> {
    return this.post(`/sessions/${id}/query`, body);
  }
}
