import { describe, expect, it } from "vitest";

import { MAX_ZOOM, MIN_ZOOM, ViewTransform, clampZoom } from "../src/transform";

function mulberry(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("coordinate round trip", () => {
  it.each([0.25, 1, 4, 8])("is identity within 0.01 px at zoom %s", (zoom) => {
    const rand = mulberry(zoom * 1000 + 1);
    const t = new ViewTransform(zoom, rand() * 2000 - 1000, rand() * 2000 - 1000);
    for (let i = 0; i < 500; i++) {
      const p = { x: rand() * 2400, y: rand() * 2400 };
      const back = t.screenToImage(t.imageToScreen(p));
      expect(Math.abs(back.x - p.x)).toBeLessThanOrEqual(0.01);
      expect(Math.abs(back.y - p.y)).toBeLessThanOrEqual(0.01);
      const fwd = t.imageToScreen(t.screenToImage(p));
      expect(Math.abs(fwd.x - p.x)).toBeLessThanOrEqual(0.01);
      expect(Math.abs(fwd.y - p.y)).toBeLessThanOrEqual(0.01);
    }
  });

  it("holds at random zooms across the whole range", () => {
    const rand = mulberry(7);
    for (let i = 0; i < 200; i++) {
      const zoom = MIN_ZOOM + rand() * (MAX_ZOOM - MIN_ZOOM);
      const t = new ViewTransform(zoom, rand() * 500, rand() * 500);
      const p = { x: rand() * 2400, y: rand() * 2400 };
      const back = t.screenToImage(t.imageToScreen(p));
      expect(Math.abs(back.x - p.x)).toBeLessThanOrEqual(0.01);
      expect(Math.abs(back.y - p.y)).toBeLessThanOrEqual(0.01);
    }
  });
});

describe("zoom clamping", () => {
  it("constrains the factor to [0.25, 8]", () => {
    expect(clampZoom(0.01)).toBe(MIN_ZOOM);
    expect(clampZoom(100)).toBe(MAX_ZOOM);
    expect(new ViewTransform(0.1).zoom).toBe(MIN_ZOOM);
    expect(new ViewTransform(20).zoom).toBe(MAX_ZOOM);
  });
});

describe("cursor-centred zoom", () => {
  it("keeps the image point under the cursor fixed", () => {
    const rand = mulberry(42);
    let t = new ViewTransform(1, -30, 80);
    for (const factor of [1.5, 1.5, 0.5, 3, 0.1]) {
      const cursor = { x: rand() * 800, y: rand() * 600 };
      const before = t.screenToImage(cursor);
      t = t.zoomAt(cursor, factor);
      const after = t.screenToImage(cursor);
      expect(Math.abs(after.x - before.x)).toBeLessThanOrEqual(1e-9);
      expect(Math.abs(after.y - before.y)).toBeLessThanOrEqual(1e-9);
      expect(t.zoom).toBeGreaterThanOrEqual(MIN_ZOOM);
      expect(t.zoom).toBeLessThanOrEqual(MAX_ZOOM);
    }
  });
});

describe("pan", () => {
  it("translates screen space only", () => {
    const t = new ViewTransform(2, 10, 20).panBy(5, -7);
    expect(t.imageToScreen({ x: 0, y: 0 })).toEqual({ x: 15, y: 13 });
    expect(t.zoom).toBe(2);
  });
});
