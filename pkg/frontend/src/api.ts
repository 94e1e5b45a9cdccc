/**
 * Typed API client with latest-request-wins per panel: a stale response
 * for a superseded epsilon is dropped instead of rendered.
 */

import type {
  AccuracyPayload, InstancePayload, Manifest, ViewPayload,
} from "./types.js";

async function getJson<T>(url: string): Promise<T> {
  const res = await fetch(url);
  if (!res.ok) {
    throw new Error(`${url} -> ${res.status}`);
  }
  return (await res.json()) as T;
}

export const fetchManifest = () => getJson<Manifest>("/api/manifest");

export const fetchAccuracy = (model: string, attack: string) =>
  getJson<AccuracyPayload>(
    `/api/accuracy?model=${encodeURIComponent(model)}&attack=${encodeURIComponent(attack)}`);

export const fetchView = (model: string, attack: string, epsilon: number,
                          level: number, vp: { x0: number; y0: number; x1: number; y1: number }) =>
  getJson<ViewPayload>(
    `/api/view?model=${encodeURIComponent(model)}&attack=${encodeURIComponent(attack)}` +
    `&epsilon=${epsilon}&level=${level}&x0=${vp.x0}&y0=${vp.y0}&x1=${vp.x1}&y1=${vp.y1}`);

export const fetchInstance = (id: number, model: string, attack: string, epsilon: number) =>
  getJson<InstancePayload>(
    `/api/instance/${id}?model=${encodeURIComponent(model)}` +
    `&attack=${encodeURIComponent(attack)}&epsilon=${epsilon}`);

/** Tracks the newest request id per panel; stale resolutions return null. */
export class LatestWins {
  private tokens = new Map<string, number>();

  async run<T>(panel: string, work: Promise<T>): Promise<T | null> {
    const token = (this.tokens.get(panel) ?? 0) + 1;
    this.tokens.set(panel, token);
    const result = await work;
    return this.tokens.get(panel) === token ? result : null;
  }
}
