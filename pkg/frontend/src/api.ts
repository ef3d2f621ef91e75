/** Typed fetch wrapper for the gtseq HTTP service.
 *
 * The client carries no statistics: every number shown in the UI comes
 * back from the server verbatim.
 */

export interface SessionOptions {
  alpha?: number;
  gamma?: number;
  k?: number;
  m?: number;
}

export interface SessionState {
  n: number;
  s: number;
  xbar: number | null;
  p_hat: number;
  threshold: number | null;
  stopped: boolean;
}

export interface DesignQuery {
  p: number;
  k?: number;
  alpha?: number;
  gamma?: number;
}

export interface DesignReply {
  k: number;
  n_required: number;
  n_ceil: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    const body = await response.json();
    if (!response.ok) {
      const message = typeof body?.error === "string" ? body.error : response.statusText;
      throw new ApiError(response.status, message);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async createSession(options: SessionOptions = {}): Promise<string> {
    const reply = await this.post<{ id: string }>("/session", options);
    return reply.id;
  }

  recordResult(id: string, positive: boolean): Promise<SessionState> {
    return this.post<SessionState>(`/session/${id}/result`, { positive });
  }

  getState(id: string): Promise<SessionState> {
    return this.request<SessionState>(`/session/${id}`);
  }

  getDesign(query: DesignQuery): Promise<DesignReply> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(query)) {
      if (value !== undefined) params.set(key, String(value));
    }
    return this.request<DesignReply>(`/design?${params}`);
  }
}
