/** Typed client for the steering service HTTP API. The console talks to
 * the service only through these endpoints. */

export interface Frame {
  step: number;
  positions: [number, number][];
}

export interface SessionInfo {
  id: string;
  seed: number;
  grid: number;
}

export interface FieldInfo {
  grid: number;
  vectors: number[][][];
}

export interface ScoreResult {
  score: number;
  description: string | null;
  source: string;
}

export interface CreateOptions {
  seed?: number;
  checkpoint?: string;
  frameRate?: number;
}

/** Error body from the service: {code, message} plus the HTTP status. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class SteerClient {
  private readonly base: string;

  constructor(
    baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  streamUrl(id: string): string {
    return `${this.base}/api/v1/sessions/${id}/stream`;
  }

  async createSession(opts: CreateOptions = {}): Promise<SessionInfo> {
    const body: Record<string, unknown> = {};
    if (opts.seed !== undefined) body.seed = opts.seed;
    if (opts.checkpoint !== undefined) body.checkpoint = opts.checkpoint;
    if (opts.frameRate !== undefined) body.frame_rate = opts.frameRate;
    return this.request("POST", "/api/v1/sessions", body);
  }

  async applyPrompt(id: string, text: string): Promise<FieldInfo> {
    return this.request("POST", `/api/v1/sessions/${id}/prompt`, { text });
  }

  async pause(id: string): Promise<{ running: boolean }> {
    return this.request("POST", `/api/v1/sessions/${id}/pause`);
  }

  async resume(id: string): Promise<{ running: boolean }> {
    return this.request("POST", `/api/v1/sessions/${id}/resume`);
  }

  async reset(id: string): Promise<{ step: number; running: boolean }> {
    return this.request("POST", `/api/v1/sessions/${id}/reset`);
  }

  async score(id: string, prompt: string): Promise<ScoreResult> {
    const query = new URLSearchParams({ prompt });
    return this.request("GET", `/api/v1/sessions/${id}/score?${query}`);
  }

  async deleteSession(id: string): Promise<{ deleted: string }> {
    return this.request("DELETE", `/api/v1/sessions/${id}`);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(`${this.base}${path}`, init);
    if (!res.ok) {
      let code = "HttpError";
      let message = `${res.status} ${res.statusText}`;
      try {
        const err = (await res.json()) as { code?: string; message?: string };
        if (err.code) code = err.code;
        if (err.message) message = err.message;
      } catch {
        // non-JSON error body, keep the status line
      }
      throw new ApiError(code, message, res.status);
    }
    return (await res.json()) as T;
  }
}
