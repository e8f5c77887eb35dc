import type { AuditEntry, SessionPayload, WaveformPayload } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string,
              public serverVersion?: number) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the service's HTTP+JSON API. */
export class ApiClient {
  constructor(private base: string = "",
              private fetchImpl: FetchLike = fetch.bind(globalThis)) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(resp.status, (body as { error?: string }).error
        ?? `HTTP ${resp.status}`, (body as { version?: number }).version);
    }
    return body as T;
  }

  createSession(wav: ArrayBuffer | Uint8Array): Promise<SessionPayload> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "audio/wav" },
      body: wav as BodyInit,
    });
  }

  getSession(id: string): Promise<SessionPayload> {
    return this.request(`/sessions/${id}`);
  }

  listSessions(): Promise<{ sessions: Array<{ id: string; version: number;
      counts: Record<string, number> }> }> {
    return this.request("/sessions");
  }

  patchThresholds(id: string, patch: Record<string, number>):
      Promise<SessionPayload> {
    return this.request(`/sessions/${id}/thresholds`, {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(patch),
    });
  }

  waveform(id: string, points: number): Promise<WaveformPayload> {
    return this.request(`/sessions/${id}/waveform?points=${points}`);
  }

  audit(id: string): Promise<{ version: number; entries: AuditEntry[] }> {
    return this.request(`/sessions/${id}/audit`);
  }

  feedback(id: string, eventId: string, verdict: string,
           reportVersion: number): Promise<{ version: number }> {
    return this.request(`/sessions/${id}/feedback`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        event_id: eventId, verdict, report_version: reportVersion,
      }),
    });
  }
}
