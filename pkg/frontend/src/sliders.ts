// Threshold slider definitions mirroring RuleConfig's numeric fields and
// their invariant ranges. The UI clamps to these before any request, so
// the service never sees an out-of-range value from a drag.

export interface SliderDef {
  field: string;
  label: string;
  min: number;
  max: number;
  step: number;
  unit: string;
}

export const SLIDERS: SliderDef[] = [
  { field: "theta_sim", label: "Prolongation similarity", min: 0.80, max: 0.995, step: 0.005, unit: "corr" },
  { field: "alpha", label: "Duration (syllable periods)", min: 0.5, max: 3.0, step: 0.05, unit: "periods" },
  { field: "theta_f0", label: "F0 jump gate", min: 2, max: 50, step: 1, unit: "Hz" },
  { field: "theta_hnr", label: "HNR gate", min: 1, max: 30, step: 0.5, unit: "dB" },
  { field: "theta_dtw", label: "Repetition DTW cost", min: 0.05, max: 0.9, step: 0.01, unit: "cost" },
  { field: "theta_R", label: "Periodicity score", min: 0.1, max: 0.95, step: 0.05, unit: "score" },
  { field: "theta_word_dtw", label: "Word-match DTW cost", min: 0.1, max: 0.95, step: 0.01, unit: "cost" },
  { field: "word_window_s", label: "Word-repeat window", min: 0.3, max: 3.0, step: 0.1, unit: "s" },
  { field: "block_silence_s", label: "Silent-block duration", min: 0.15, max: 1.5, step: 0.05, unit: "s" },
  { field: "audible_block_min_s", label: "Audible-block duration", min: 0.1, max: 1.0, step: 0.05, unit: "s" },
  { field: "min_separation_s", label: "Merge separation", min: 0.02, max: 0.5, step: 0.01, unit: "s" },
];

export function clampToRange(def: SliderDef, value: number): number {
  if (Number.isNaN(value)) return def.min;
  return Math.min(def.max, Math.max(def.min, value));
}

export function sliderFor(field: string): SliderDef | undefined {
  return SLIDERS.find((s) => s.field === field);
}
