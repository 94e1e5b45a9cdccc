/**
 * Pure interpolators behind the attack animation. The browser loop feeds
 * t in [0, 1]; everything here is deterministic so transitions can be
 * asserted in tests frame by frame.
 */

import type { ViewPoint } from "./types.js";

export const TRANSITION_MS = 400;

export interface FramePoint extends ViewPoint {
  opacity: number;
  /** class whose color fills the right half while in flight */
  colorClass: number;
}

export const lerp = (a: number, b: number, t: number) => a + (b - a) * t;

/**
 * Match points by id and interpolate position; entering points fade in,
 * leaving points fade out. The right-half color snaps to the new
 * prediction halfway through the crossing.
 */
export function interpolatePoints(
  before: ViewPoint[],
  after: ViewPoint[],
  t: number,
): FramePoint[] {
  const prev = new Map(before.map((p) => [p.id, p]));
  const next = new Map(after.map((p) => [p.id, p]));
  const frame: FramePoint[] = [];
  for (const p of after) {
    const old = prev.get(p.id);
    if (old) {
      frame.push({
        ...p,
        x: lerp(old.x, p.x, t),
        y: lerp(old.y, p.y, t),
        opacity: 1,
        colorClass: t < 0.5 ? old.prediction : p.prediction,
      });
    } else {
      frame.push({ ...p, opacity: t, colorClass: p.prediction });
    }
  }
  for (const p of before) {
    if (!next.has(p.id)) frame.push({ ...p, opacity: 1 - t, colorClass: p.prediction });
  }
  return frame;
}

/** Robustness bar heights tween together with the scatter motion. */
export function interpolateBar(before: number, after: number, t: number): number {
  return lerp(before, after, t);
}
