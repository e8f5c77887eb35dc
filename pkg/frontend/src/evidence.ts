import type { DetectedEvent } from "./types.js";

/** Evidence rows exactly as the server sent them: values are stringified
 * straight from the parsed payload, never recomputed or reformatted. */
export function evidenceRows(ev: DetectedEvent): Array<[string, string]> {
  const rows: Array<[string, string]> = [
    ["kind", String(ev.kind)],
    ["start_s", String(ev.start_s)],
    ["end_s", String(ev.end_s)],
    ["confidence", String(ev.confidence)],
  ];
  for (const [k, v] of Object.entries(ev.evidence)) {
    rows.push([k, String(v)]);
  }
  return rows;
}
