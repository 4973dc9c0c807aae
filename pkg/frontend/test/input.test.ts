import { describe, expect, it } from "vitest";

import { defaultAimPlane, dragToHands, handSeparation } from "../src/input.js";

describe("drag mapping", () => {
  it("anchors both hands at the plane origin before any drag", () => {
    const hands = dragToHands([0, 0], [0, 0], 0);
    expect(hands.pBow).toEqual([0, 0, 1.5]);
    expect(hands.pArrow).toEqual([0, 0, 1.5]);
    expect(handSeparation(hands)).toBe(0);
  });

  it("maps canvas pixels to plane meters with y flipped", () => {
    const hands = dragToHands([0, 0], [100, -40], 0);
    // 100 px right = +0.5 m along x, 40 px up = +0.2 m along z
    expect(hands.pArrow[0]).toBeCloseTo(0.5, 12);
    expect(hands.pArrow[2]).toBeCloseTo(1.7, 12);
    expect(hands.pArrow[1]).toBe(0);
  });

  it("scroll notches move both hands along the plane normal", () => {
    const hands = dragToHands([0, 0], [0, 80], 6);
    expect(hands.pBow[1]).toBeCloseTo(0.3, 12);
    expect(hands.pArrow[1]).toBeCloseTo(0.3, 12);
    // depth shift preserves the draw length
    expect(handSeparation(hands)).toBeCloseTo(0.4, 12);
  });

  it("honors a custom plane", () => {
    const plane = { ...defaultAimPlane(), metersPerPixel: 0.01 };
    const hands = dragToHands([0, 0], [0, 50], 0, plane);
    expect(handSeparation(hands)).toBeCloseTo(0.5, 12);
  });
});
