import { ApiClient, FetchLike } from "../src/api.js";
import type { Scheduler } from "../src/state.js";
import type { Report, SessionPayload } from "../src/types.js";

/** Deterministic manual scheduler standing in for setTimeout. */
export class ManualScheduler implements Scheduler {
  private next = 1;
  private tasks = new Map<number, { fn: () => void; at: number }>();
  now = 0;

  set(fn: () => void, ms: number): number {
    const h = this.next++;
    this.tasks.set(h, { fn, at: this.now + ms });
    return h;
  }

  clear(handle: number): void {
    this.tasks.delete(handle);
  }

  advance(ms: number): void {
    this.now += ms;
    const due = [...this.tasks.entries()]
      .filter(([, t]) => t.at <= this.now)
      .sort((a, b) => a[1].at - b[1].at);
    for (const [h, t] of due) {
      this.tasks.delete(h);
      t.fn();
    }
  }

  pending(): number {
    return this.tasks.size;
  }
}

export function makeReport(version: number,
                           config: Record<string, number>,
                           events: Report["events"]): Report {
  const counts: Record<string, number> = {
    Prolongation: 0, SoundRep: 0, WordRep: 0, Block: 0,
  };
  for (const e of events) counts[e.kind] += 1;
  return {
    version,
    recording_id: "mock",
    speaking_rate: 3.2,
    counts,
    config,
    events,
  };
}

export function sessionPayload(version: number,
                               config: Record<string, number>,
                               events: Report["events"]): SessionPayload {
  return { id: "sess1", version, report: makeReport(version, config, events),
           feedback: [] };
}

/** Scriptable fake service speaking the same wire protocol. */
export class FakeService {
  version = 1;
  config: Record<string, number> = { theta_sim: 0.92, alpha: 1.2 };
  events: Report["events"] = [];
  patchCalls: Array<Record<string, number>> = [];
  rejectNextPatch: string | null = null;
  offline = false;
  onPatch: ((patch: Record<string, number>) => void) | null = null;

  fetch: FetchLike = async (url, init) => {
    if (this.offline) throw new TypeError("fetch failed");
    const method = init?.method ?? "GET";
    const respond = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), { status });

    if (url.endsWith("/thresholds") && method === "PATCH") {
      const patch = JSON.parse(String(init?.body)) as Record<string, number>;
      this.patchCalls.push(patch);
      if (this.rejectNextPatch) {
        const msg = this.rejectNextPatch;
        this.rejectNextPatch = null;
        return respond(422, { error: msg });
      }
      Object.assign(this.config, patch);
      this.version += 1;
      this.onPatch?.(patch);
      return respond(200, sessionPayload(this.version, this.config, this.events));
    }
    if (url.includes("/waveform")) {
      return respond(200, { version: this.version, points: 4,
                            duration_s: 2.0,
                            peaks: [[-0.5, 0.5], [-0.5, 0.5], [-0.5, 0.5], [-0.5, 0.5]] });
    }
    if (url.includes("/audit")) {
      return respond(200, { version: this.version, entries: [] });
    }
    if (url.includes("/feedback") && method === "POST") {
      const body = JSON.parse(String(init?.body)) as { report_version: number };
      if (body.report_version !== this.version) {
        return respond(409, { error: "stale", version: this.version });
      }
      return respond(200, { version: this.version, recorded: {} });
    }
    if (url.includes("/sessions/")) {
      return respond(200, sessionPayload(this.version, this.config, this.events));
    }
    return respond(404, { error: "unknown" });
  };

  client(): ApiClient {
    return new ApiClient("http://fake", this.fetch);
  }
}
