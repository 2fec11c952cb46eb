/** Thin typed client over the chat service's HTTP API. */

import type {
  ApiError,
  SessionSummary,
  Transcript,
  TurnPayload,
} from "./types.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function toApiError(response: Response): Promise<ApiError> {
  let code = "HTTP_ERROR";
  let message = response.statusText;
  try {
    const body = await response.json();
    const detail = body?.detail;
    if (detail && typeof detail === "object") {
      code = detail.code ?? code;
      message = detail.message ?? message;
    } else if (typeof detail === "string") {
      message = detail;
    }
  } catch {
    // non-JSON body: keep the defaults
  }
  return { status: response.status, code, message };
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      throw await toApiError(response);
    }
    return (await response.json()) as T;
  }

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return this.request("/sessions");
  }

  createSession(table: string): Promise<{ id: string; dataset_ref: string }> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ table }),
    });
  }

  getTranscript(sessionId: string): Promise<Transcript> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  postMessage(sessionId: string, text: string): Promise<TurnPayload> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }
}
