// Wire types mirroring the service's JSON schemas. Field names are the
// shared contract; evidence keys arrive verbatim from the detectors.

export type EventKind = "Prolongation" | "SoundRep" | "WordRep" | "Block";

export interface DetectedEvent {
  id: string;
  kind: EventKind;
  start_s: number;
  end_s: number;
  confidence: number;
  evidence: Record<string, number | string>;
}

export interface Report {
  version: number;
  recording_id: string;
  speaking_rate: number;
  counts: Record<string, number>;
  config: Record<string, unknown>;
  events: DetectedEvent[];
}

export interface SessionPayload {
  id: string;
  version: number;
  report: Report;
  feedback: FeedbackRow[];
}

export interface FeedbackRow {
  ts: number;
  event_id: string;
  verdict: string;
  author: string;
  report_version: number;
  stale: boolean;
}

export interface AuditEntry {
  ts: number;
  field: string;
  old: unknown;
  new: unknown;
  author: string;
  batch: string;
}

export interface WaveformPayload {
  version: number;
  points: number;
  duration_s: number;
  peaks: Array<[number, number]>;
}
