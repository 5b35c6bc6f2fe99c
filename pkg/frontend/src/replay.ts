import type { StrokePoint } from "./capture.js";

/**
 * The "replay as attack" transform: keep the drawn path, respace the
 * timestamps uniformly over the original duration.  A machine replaying a
 * stroke ticks like a metronome; the perfectly even timing is what the
 * verifier should pick up on.
 */
export function respaceUniform(points: StrokePoint[]): StrokePoint[] {
  const n = points.length;
  if (n < 2) return points.slice();
  const duration = points[n - 1].t - points[0].t;
  return points.map((p, i) => ({ x: p.x, y: p.y, t: (duration * i) / (n - 1) }));
}
