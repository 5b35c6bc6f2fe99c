import { describe, expect, it } from "vitest";

import { respaceUniform } from "../src/replay.js";
import type { StrokePoint } from "../src/capture.js";

function jittered(n: number): StrokePoint[] {
  let t = 0;
  const out: StrokePoint[] = [];
  for (let i = 0; i < n; i++) {
    out.push({ x: Math.sin(i), y: Math.cos(i), t });
    t += 0.008 + 0.01 * ((i * 7919) % 13) / 13;
  }
  return out;
}

describe("respaceUniform", () => {
  it("keeps the path and the endpoints' times", () => {
    const original = jittered(20);
    const replayed = respaceUniform(original);
    expect(replayed).toHaveLength(20);
    expect(replayed.map((p) => [p.x, p.y]))
      .toEqual(original.map((p) => [p.x, p.y]));
    expect(replayed[0].t).toBe(0);
    expect(replayed[19].t).toBeCloseTo(original[19].t - original[0].t, 12);
  });

  it("produces perfectly even, strictly increasing timestamps", () => {
    const replayed = respaceUniform(jittered(15));
    const dts = [];
    for (let i = 1; i < replayed.length; i++) {
      dts.push(replayed[i].t - replayed[i - 1].t);
    }
    for (const dt of dts) {
      expect(dt).toBeGreaterThan(0);
      expect(dt).toBeCloseTo(dts[0], 12);
    }
  });

  it("does not mutate the input", () => {
    const original = jittered(10);
    const copy = original.map((p) => ({ ...p }));
    respaceUniform(original);
    expect(original).toEqual(copy);
  });

  it("passes short strokes through", () => {
    expect(respaceUniform([])).toEqual([]);
    expect(respaceUniform([{ x: 1, y: 2, t: 0 }]))
      .toEqual([{ x: 1, y: 2, t: 0 }]);
  });
});
