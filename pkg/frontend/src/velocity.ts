import type { StrokePoint } from "./capture.js";

/**
 * Pen-tip speed per step: Euclidean distance over time difference, one
 * value per consecutive pair.  Must agree with the server's velocity
 * feature on the same points, so the formula is kept identical.
 */
export function velocityProfile(points: StrokePoint[]): number[] {
  const out: number[] = [];
  for (let i = 1; i < points.length; i++) {
    const dx = points[i].x - points[i - 1].x;
    const dy = points[i].y - points[i - 1].y;
    const dt = points[i].t - points[i - 1].t;
    out.push(Math.hypot(dx, dy) / dt);
  }
  return out;
}
