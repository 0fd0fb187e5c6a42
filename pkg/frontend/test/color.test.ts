import { describe, expect, it } from "vitest";

import {
  divergingColor,
  labelColor,
  SELECTION_COLOR,
  strategyColor,
} from "../src/color.js";

describe("diverging ramp", () => {
  it("is white at zero and saturates at the ramp ends", () => {
    expect(divergingColor(0, 1)).toBe("#FFFFFF");
    expect(divergingColor(1, 1)).toBe("#B2182B");
    expect(divergingColor(-1, 1)).toBe("#2166AC");
    expect(divergingColor(99, 1)).toBe("#B2182B");
    expect(divergingColor(-99, 1)).toBe("#2166AC");
  });

  it("degenerate vmax maps everything to white", () => {
    expect(divergingColor(3, 0)).toBe("#FFFFFF");
    expect(divergingColor(-3, -1)).toBe("#FFFFFF");
    expect(divergingColor(5, NaN)).toBe("#FFFFFF");
  });

  it("red channel shrinks monotonically as positive values grow", () => {
    // the positive branch moves white -> #B2182B, so G and B must not rise
    let prevG = 256;
    for (const t of [0.1, 0.3, 0.5, 0.7, 0.9, 1.0]) {
      const g = parseInt(divergingColor(t, 1).slice(3, 5), 16);
      expect(g).toBeLessThanOrEqual(prevG);
      prevG = g;
    }
  });
});

describe("label ramp", () => {
  it("hits the pinned endpoints and midpoint", () => {
    expect(labelColor(0, 0, 1)).toBe("#440154");
    expect(labelColor(0.5, 0, 1)).toBe("#21918C");
    expect(labelColor(1, 0, 1)).toBe("#FDE725");
  });

  it("clamps out-of-range values and handles degenerate ranges", () => {
    expect(labelColor(-5, 0, 1)).toBe("#440154");
    expect(labelColor(5, 0, 1)).toBe("#FDE725");
    expect(labelColor(3, 2, 2)).toBe("#21918C");
  });
});

describe("strategy colors", () => {
  it("pins the three strategies and falls back to gray", () => {
    expect(strategyColor("al")).toBe("#1B9E77");
    expect(strategyColor("uc")).toBe("#D95F02");
    expect(strategyColor("rn")).toBe("#7570B3");
    expect(strategyColor("mystery")).toBe("#666666");
    expect(SELECTION_COLOR).toBe("#E41A1C");
  });
});
