import { describe, expect, it } from "vitest";

import { chartPath } from "../src/chart.js";

describe("chartPath", () => {
  it("is empty for an empty profile", () => {
    expect(chartPath([], 100, 50)).toEqual([]);
  });

  it("spans the full width and stays inside the height", () => {
    const path = chartPath([1, 5, 2, 4, 3], 200, 60);
    expect(path[0][0]).toBe(0);
    expect(path[path.length - 1][0]).toBe(200);
    for (const [, y] of path) {
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(60);
    }
  });

  it("puts the maximum at the top and scales the rest", () => {
    const path = chartPath([2, 4], 100, 52);
    expect(path[1][1]).toBe(2);
    expect(path[0][1]).toBe(26);
  });

  it("centers a single value", () => {
    expect(chartPath([7], 100, 50)[0][0]).toBe(50);
  });
});
