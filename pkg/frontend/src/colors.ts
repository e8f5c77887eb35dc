import type { EventKind } from "./types.js";

// One distinct color per dysfluency kind (legend + waveform regions).
export const KIND_COLORS: Record<EventKind, string> = {
  Block: "#d62728",
  SoundRep: "#ff7f0e",
  Prolongation: "#1f77b4",
  WordRep: "#2ca02c",
};

export const KIND_ORDER: EventKind[] = [
  "Block", "SoundRep", "Prolongation", "WordRep",
];

export function colorFor(kind: EventKind): string {
  return KIND_COLORS[kind];
}
