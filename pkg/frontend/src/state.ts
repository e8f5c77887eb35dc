import { ApiClient, ApiError } from "./api.js";
import { clampToRange, sliderFor } from "./sliders.js";
import type { AuditEntry, DetectedEvent, Report, SessionPayload,
              WaveformPayload } from "./types.js";

export interface Scheduler {
  set(fn: () => void, ms: number): number;
  clear(handle: number): void;
}

const realScheduler: Scheduler = {
  set: (fn, ms) => setTimeout(fn, ms) as unknown as number,
  clear: (h) => clearTimeout(h as unknown as ReturnType<typeof setTimeout>),
};

export interface ViewState {
  sessionId: string | null;
  version: number;
  report: Report | null;
  peaks: Array<[number, number]>;
  durationS: number;
  sliders: Record<string, number>;     // live slider positions
  serverConfig: Record<string, number>; // last server-confirmed values
  selectedEventId: string | null;
  verdicts: Record<string, string>;    // event id -> verdict badge
  audit: AuditEntry[];
  banner: string | null;               // inline error / rejection text
  refreshPrompt: boolean;              // stale-feedback conflict
  offline: boolean;                    // service unreachable, retry shown
  pendingPatch: boolean;
}

const DEBOUNCE_MS = 300;

/** Headless session controller: all UI behavior lives here so both the
 * DOM layer and the test harness drive the same logic. */
export class SessionController {
  state: ViewState = {
    sessionId: null, version: 0, report: null, peaks: [], durationS: 0,
    sliders: {}, serverConfig: {}, selectedEventId: null, verdicts: {},
    audit: [], banner: null, refreshPrompt: false, offline: false,
    pendingPatch: false,
  };

  private listeners: Array<(s: ViewState) => void> = [];
  private debounceHandle: number | null = null;
  private pendingFields: Record<string, number> = {};
  private inflight = false;
  private queued = false;

  constructor(private api: ApiClient,
              private scheduler: Scheduler = realScheduler,
              private debounceMs: number = DEBOUNCE_MS) {}

  onChange(cb: (s: ViewState) => void): void {
    this.listeners.push(cb);
  }

  private emit(): void {
    for (const cb of this.listeners) cb(this.state);
  }

  /** Apply a session payload iff its version token is not older than the
   * one on display: the view must never regress to a stale report. */
  private applySession(payload: SessionPayload): boolean {
    if (payload.version < this.state.version) return false;
    this.state.sessionId = payload.id;
    this.state.version = payload.version;
    this.state.report = payload.report;
    const cfg: Record<string, number> = {};
    for (const [k, v] of Object.entries(payload.report.config)) {
      if (typeof v === "number") cfg[k] = v;
    }
    this.state.serverConfig = cfg;
    this.state.sliders = { ...cfg };
    this.state.verdicts = {};
    for (const row of payload.feedback) {
      if (!row.stale) this.state.verdicts[row.event_id] = row.verdict;
    }
    this.state.offline = false;
    return true;
  }

  async load(sessionId: string): Promise<void> {
    try {
      const payload = await this.api.getSession(sessionId);
      this.applySession(payload);
      const wf: WaveformPayload = await this.api.waveform(sessionId, 900);
      if (wf.version === this.state.version) {
        this.state.peaks = wf.peaks;
        this.state.durationS = wf.duration_s;
      }
      const audit = await this.api.audit(sessionId);
      this.state.audit = audit.entries;
      this.state.banner = null;
    } catch (err) {
      this.state.offline = true;
      this.state.banner = `service unreachable: ${(err as Error).message}`;
    }
    this.emit();
  }

  selectEvent(eventId: string | null): void {
    this.state.selectedEventId = eventId;
    this.emit();
  }

  selectedEvent(): DetectedEvent | null {
    if (!this.state.report || !this.state.selectedEventId) return null;
    return this.state.report.events.find(
      (e) => e.id === this.state.selectedEventId) ?? null;
  }

  /** Slider moved. Values are clamped client-side; a clamped-out-of-range
   * drag that lands on the current value sends nothing. */
  setSlider(field: string, value: number): void {
    const def = sliderFor(field);
    if (!def) return;
    const clamped = clampToRange(def, value);
    this.state.sliders[field] = clamped;
    if (clamped === this.state.serverConfig[field]) {
      delete this.pendingFields[field];
      this.emit();
      return;
    }
    this.pendingFields[field] = clamped;
    this.state.pendingPatch = true;
    if (this.debounceHandle !== null) this.scheduler.clear(this.debounceHandle);
    this.debounceHandle = this.scheduler.set(() => {
      this.debounceHandle = null;
      void this.flushPatch();
    }, this.debounceMs);
    this.emit();
  }

  /** Send the pending patch now (the debounce timer calls this). One
   * mutation in flight per session; a patch arriving meanwhile queues. */
  async flushPatch(): Promise<void> {
    if (this.inflight) {
      this.queued = true;
      return;
    }
    const patch = this.pendingFields;
    this.pendingFields = {};
    if (!this.state.sessionId || Object.keys(patch).length === 0) {
      this.state.pendingPatch = false;
      this.emit();
      return;
    }
    this.inflight = true;
    try {
      const payload = await this.api.patchThresholds(this.state.sessionId, patch);
      this.applySession(payload);
      const audit = await this.api.audit(this.state.sessionId);
      if (audit.version === this.state.version) {
        this.state.audit = audit.entries;
      }
      this.state.banner = null;
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        this.state.banner = `rejected: ${err.message}`;
      } else {
        this.state.offline = true;
        this.state.banner = `service unreachable: ${(err as Error).message}`;
      }
      // revert sliders to the last server-confirmed state
      this.state.sliders = { ...this.state.serverConfig };
    } finally {
      this.inflight = false;
      this.state.pendingPatch = Object.keys(this.pendingFields).length > 0;
    }
    this.emit();
    if (this.queued) {
      this.queued = false;
      await this.flushPatch();
    }
  }

  async submitFeedback(eventId: string, verdict: string): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      await this.api.feedback(this.state.sessionId, eventId, verdict,
                              this.state.version);
      this.state.verdicts[eventId] = verdict;
      this.state.refreshPrompt = false;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.state.refreshPrompt = true;
        this.state.banner = "report changed on the server; refresh to continue";
      } else {
        this.state.offline = true;
        this.state.banner = `service unreachable: ${(err as Error).message}`;
      }
    }
    this.emit();
  }

  async retry(): Promise<void> {
    if (this.state.sessionId) {
      this.state.offline = false;
      await this.load(this.state.sessionId);
    }
  }

  /** Events of one kind currently on display (used by the region test). */
  eventsOfKind(kind: string): DetectedEvent[] {
    if (!this.state.report) return [];
    return this.state.report.events.filter((e) => e.kind === kind);
  }
}
