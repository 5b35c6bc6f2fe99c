/**
 * Velocity strip chart: the profile rendered as a polyline, normalized to
 * its own maximum.  Path computation is pure so it can be tested without
 * a canvas.
 */

export function chartPath(
  profile: number[],
  width: number,
  height: number,
): [number, number][] {
  const n = profile.length;
  if (n === 0) return [];
  const max = Math.max(...profile, 1e-9);
  const pad = 2;
  return profile.map((v, i): [number, number] => [
    n === 1 ? width / 2 : (i * width) / (n - 1),
    height - pad - (v / max) * (height - 2 * pad),
  ]);
}

export function drawStripChart(canvas: HTMLCanvasElement, profile: number[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const path = chartPath(profile, canvas.width, canvas.height);
  if (path.length === 0) return;
  ctx.beginPath();
  ctx.moveTo(path[0][0], path[0][1]);
  for (const [x, y] of path.slice(1)) ctx.lineTo(x, y);
  ctx.strokeStyle = "#2b6cb0";
  ctx.lineWidth = 1.5;
  ctx.stroke();
}

/** Probability gauge: a half dial whose needle points at p in [0, 1]. */
export function drawGauge(canvas: HTMLCanvasElement, probability: number): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  const cx = w / 2;
  const cy = h - 8;
  const r = Math.min(w / 2, h) - 12;
  ctx.clearRect(0, 0, w, h);

  ctx.lineWidth = 10;
  ctx.strokeStyle = "#68d391";
  ctx.beginPath();
  ctx.arc(cx, cy, r, Math.PI, Math.PI * 1.5);
  ctx.stroke();
  ctx.strokeStyle = "#fc8181";
  ctx.beginPath();
  ctx.arc(cx, cy, r, Math.PI * 1.5, Math.PI * 2);
  ctx.stroke();

  const angle = Math.PI + probability * Math.PI;
  ctx.strokeStyle = "#1a202c";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(cx + (r - 6) * Math.cos(angle), cy + (r - 6) * Math.sin(angle));
  ctx.stroke();
}
