import { colorFor } from "./colors.js";
import type { DetectedEvent } from "./types.js";

/** Draw min/max peak pairs plus color-coded dysfluency regions. The
 * region rectangles map 1:1 to the events in the latest report. */
export function drawWaveform(
  canvas: HTMLCanvasElement,
  peaks: Array<[number, number]>,
  durationS: number,
  events: DetectedEvent[],
  selectedId: string | null,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  const mid = height / 2;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, width, height);

  if (durationS > 0) {
    for (const ev of events) {
      const x0 = (ev.start_s / durationS) * width;
      const x1 = (ev.end_s / durationS) * width;
      ctx.fillStyle = colorFor(ev.kind) + (ev.id === selectedId ? "66" : "33");
      ctx.fillRect(x0, 0, Math.max(x1 - x0, 2), height);
      if (ev.id === selectedId) {
        ctx.strokeStyle = colorFor(ev.kind);
        ctx.lineWidth = 2;
        ctx.strokeRect(x0, 1, Math.max(x1 - x0, 2), height - 2);
      }
    }
  }

  ctx.strokeStyle = "#334";
  ctx.lineWidth = 1;
  ctx.beginPath();
  const n = peaks.length;
  for (let i = 0; i < n; i++) {
    const x = (i / n) * width;
    const [lo, hi] = peaks[i];
    ctx.moveTo(x, mid - hi * mid * 0.95);
    ctx.lineTo(x, mid - lo * mid * 0.95);
  }
  ctx.stroke();
}

/** Event x-extent in canvas pixels, for click hit-testing. */
export function hitTest(
  events: DetectedEvent[], durationS: number, width: number, x: number,
): DetectedEvent | null {
  if (durationS <= 0) return null;
  const t = (x / width) * durationS;
  let best: DetectedEvent | null = null;
  for (const ev of events) {
    if (ev.start_s <= t && t <= ev.end_s) {
      if (!best || ev.end_s - ev.start_s < best.end_s - best.start_s) {
        best = ev; // prefer the shortest region under the cursor
      }
    }
  }
  return best;
}
