/**
 * Pointer-to-hand mapping: 2D drags position the bow and arrow hands on a
 * configurable vertical aiming plane; the scroll wheel slides both hands
 * along the plane normal (depth). Tracked 3D hands have no browser
 * equivalent, so this is the desktop stand-in.
 */

import type { Vec3 } from "./protocol.js";

export interface AimPlane {
  /** World point mapped to the canvas anchor. */
  origin: Vec3;
  /** World direction of +x in canvas space (unit). */
  xAxis: Vec3;
  /** World direction of +y in canvas space (unit, usually up). */
  yAxis: Vec3;
  /** World direction the scroll wheel pushes along (unit). */
  normal: Vec3;
  /** Meters per canvas pixel. */
  metersPerPixel: number;
  /** Meters per scroll-wheel notch. */
  metersPerNotch: number;
}

/** Archer stands at the arena edge facing the gates along +y. */
export function defaultAimPlane(): AimPlane {
  return {
    origin: [0, 0, 1.5],
    xAxis: [1, 0, 0],
    yAxis: [0, 0, 1],
    normal: [0, 1, 0],
    metersPerPixel: 0.005,
    metersPerNotch: 0.05,
  };
}

export interface HandPositions {
  pBow: Vec3;
  pArrow: Vec3;
}

function axpy(out: number[], s: number, v: Vec3): void {
  out[0]! += s * v[0];
  out[1]! += s * v[1];
  out[2]! += s * v[2];
}

/**
 * Map canvas-space hand anchors to world hand positions.
 *
 * bowPx / arrowPx are pixel offsets of each hand from the aim anchor
 * (canvas +y is down and is flipped here); depthNotches accumulates wheel
 *  input, moving both hands together.
 */
export function dragToHands(
  bowPx: readonly [number, number],
  arrowPx: readonly [number, number],
  depthNotches: number,
  plane: AimPlane = defaultAimPlane(),
): HandPositions {
  const make = (px: readonly [number, number]): Vec3 => {
    const p: number[] = [plane.origin[0], plane.origin[1], plane.origin[2]];
    axpy(p, px[0] * plane.metersPerPixel, plane.xAxis);
    axpy(p, -px[1] * plane.metersPerPixel, plane.yAxis);
    axpy(p, depthNotches * plane.metersPerNotch, plane.normal);
    return [p[0]!, p[1]!, p[2]!];
  };
  return { pBow: make(bowPx), pArrow: make(arrowPx) };
}

/** Hand separation in meters (drives the expected tension readout). */
export function handSeparation(hands: HandPositions): number {
  const dx = hands.pBow[0] - hands.pArrow[0];
  const dy = hands.pBow[1] - hands.pArrow[1];
  const dz = hands.pBow[2] - hands.pArrow[2];
  return Math.sqrt(dx * dx + dy * dy + dz * dz);
}
