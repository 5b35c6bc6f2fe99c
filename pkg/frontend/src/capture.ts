/**
 * Stroke capture: accumulates (x, y, t) while the pointer is down.
 *
 * Coordinates are canvas pixels; t is seconds relative to the first event,
 * taken from the platform's monotonic event clock (never wall time).  Events
 * whose timestamp does not advance are dropped so every payload carries
 * strictly increasing timestamps.  Points are submitted exactly as captured;
 * no smoothing or resampling happens client-side.
 */

export interface StrokePoint {
  x: number;
  y: number;
  t: number;
}

export interface VerifyPayload {
  points: [number, number, number][];
}

export class StrokeRecorder {
  private points: StrokePoint[] = [];
  private originMs: number | null = null;
  private drawing = false;

  get isDrawing(): boolean {
    return this.drawing;
  }

  begin(x: number, y: number, timeMs: number): void {
    this.points = [{ x, y, t: 0 }];
    this.originMs = timeMs;
    this.drawing = true;
  }

  extend(x: number, y: number, timeMs: number): void {
    if (!this.drawing || this.originMs === null) return;
    const t = (timeMs - this.originMs) / 1000;
    const last = this.points[this.points.length - 1];
    if (t <= last.t) return;
    this.points.push({ x, y, t });
  }

  finish(): StrokePoint[] {
    this.drawing = false;
    return this.points.slice();
  }

  clear(): void {
    this.points = [];
    this.originMs = null;
    this.drawing = false;
  }
}

/** A stroke must have at least two events to be worth submitting. */
export function longEnough(points: StrokePoint[]): boolean {
  return points.length >= 2;
}

export function toPayload(points: StrokePoint[]): VerifyPayload {
  return { points: points.map((p): [number, number, number] => [p.x, p.y, p.t]) };
}
